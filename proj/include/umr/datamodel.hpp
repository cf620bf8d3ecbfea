#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace umr::data {

enum class Modality { Text, Image, ImageText };
enum class QueryKind { Plain, QA, Modification };
enum class Side { CorpusSide, QuerySide };
enum class Category { I, II, III };

std::string to_string(Modality m);
Modality modality_from_string(const std::string& s);
std::string to_string(QueryKind k);
QueryKind query_kind_from_string(const std::string& s);
std::string to_string(Side s);
Side side_from_string(const std::string& s);
std::string to_string(Category c);
Category category_from_string(const std::string& s);

struct Document {
    std::string did;
    std::optional<std::string> text;
    std::optional<std::string> image_ref;
    Modality modality = Modality::Text;
    std::optional<std::string> image_tokens_ref;

    bool operator==(const Document&) const = default;
};

struct Query {
    std::string qid;
    std::optional<std::string> text;
    std::optional<std::string> image_ref;
    Modality modality = Modality::Text;
    std::string task_id;
    QueryKind kind = QueryKind::Plain;
    std::set<std::string> positives;
    std::string instruction;
    std::optional<std::string> image_tokens_ref;

    bool operator==(const Query&) const = default;
};

struct TaskSpec {
    std::string task_id;
    std::string name;
    Modality query_modality = Modality::Text;
    Modality corpus_modality = Modality::Text;
    std::string pool_id;
    QueryKind kind = QueryKind::Plain;
    std::vector<int> cutoffs = {1, 5, 10, 50};
    std::string instruction;
    // Excluded from macro averages; mirrors benchmarks whose ground truth is
    // known to be unreliable.
    bool advisory = false;
};

struct TaskRegistry {
    std::map<std::string, TaskSpec> tasks;

    const TaskSpec& at(const std::string& task_id) const;
    bool contains(const std::string& task_id) const { return tasks.count(task_id) > 0; }
};

struct EnhancedRecord {
    std::string source_id;
    Side side = Side::CorpusSide;
    std::string enhanced_text;
    Category category = Category::I;
    std::string template_id;
    std::string model_id;
    std::string raw_reply;
    bool fallback = false;

    bool operator==(const EnhancedRecord&) const = default;
};

// Token files: one token per line, resolved relative to a root directory.
// Loaded lazily and cached; collections are immutable after load so reads
// from multiple threads are safe once warmed (warm() preloads).
class SidecarStore {
public:
    SidecarStore() = default;
    explicit SidecarStore(std::string root) : root_(std::move(root)) {}

    const std::vector<std::string>& get(const std::string& ref) const;
    void warm(const std::vector<std::string>& refs) const;
    const std::string& root() const { return root_; }

private:
    std::string root_;
    mutable std::map<std::string, std::vector<std::string>> cache_;
};

std::vector<Document> load_corpus(const std::string& path);
std::vector<Query> load_queries(const std::string& path, const TaskRegistry& tasks);
TaskRegistry load_tasks(const std::string& path);

void write_corpus(const std::vector<Document>& docs, const std::string& path);
void write_queries(const std::vector<Query>& queries, const std::string& path);
void write_enhanced(const std::vector<EnhancedRecord>& records, const std::string& path);
std::vector<EnhancedRecord> load_enhanced(const std::string& path);

}  // namespace umr::data
