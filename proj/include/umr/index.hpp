#pragma once

#include <string>
#include <vector>

#include "umr/embed.hpp"

namespace umr::index {

struct SearchEntry {
    std::string did;
    double score = 0.0;

    bool operator==(const SearchEntry&) const = default;
};

struct SearchResult {
    std::vector<SearchEntry> entries;  // score descending, ties by ascending did
};

class VectorIndex {
public:
    static VectorIndex build(const std::vector<std::pair<std::string, embed::Vec>>& vectors);

    SearchResult search(const embed::Vec& q, int k) const;
    std::vector<SearchResult> batch_search(const std::vector<embed::Vec>& queries, int k,
                                           int n_threads = 1) const;

    size_t size() const { return ids_.size(); }
    int dim() const { return dim_; }
    const std::vector<std::string>& ids() const { return ids_; }
    const double* row(size_t i) const { return matrix_.data() + i * dim_; }

    void save(const std::string& path) const;
    static VectorIndex load(const std::string& path);

private:
    int dim_ = 0;
    std::vector<double> matrix_;  // row-major N x dim
    std::vector<std::string> ids_;
};

}  // namespace umr::index
