#include "umr/index.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>
#include <thread>

namespace umr::index {

VectorIndex VectorIndex::build(const std::vector<std::pair<std::string, embed::Vec>>& vectors) {
    if (vectors.empty()) throw std::runtime_error("index build: no vectors");
    VectorIndex idx;
    idx.dim_ = static_cast<int>(vectors.front().second.size());
    idx.matrix_.reserve(vectors.size() * idx.dim_);
    idx.ids_.reserve(vectors.size());
    std::set<std::string> seen;
    for (const auto& [did, vec] : vectors) {
        if (static_cast<int>(vec.size()) != idx.dim_)
            throw std::runtime_error("index build: dimension mismatch at '" + did + "'");
        if (!seen.insert(did).second)
            throw std::runtime_error("index build: duplicate did '" + did + "'");
        idx.ids_.push_back(did);
        idx.matrix_.insert(idx.matrix_.end(), vec.begin(), vec.end());
    }
    return idx;
}

SearchResult VectorIndex::search(const embed::Vec& q, int k) const {
    if (k < 1) throw std::runtime_error("search: k must be >= 1");
    if (static_cast<int>(q.size()) != dim_) throw std::runtime_error("search: dimension mismatch");
    const size_t n = ids_.size();
    std::vector<double> scores(n);
    for (size_t r = 0; r < n; ++r) {
        const double* row = matrix_.data() + r * dim_;
        double s = 0.0;
        for (int j = 0; j < dim_; ++j) s += row[j] * q[j];
        scores[r] = s;
    }
    std::vector<size_t> rows(n);
    for (size_t r = 0; r < n; ++r) rows[r] = r;
    auto better = [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return ids_[a] < ids_[b];
    };
    size_t kk = std::min(static_cast<size_t>(k), n);
    std::partial_sort(rows.begin(), rows.begin() + kk, rows.end(), better);
    SearchResult res;
    res.entries.reserve(kk);
    for (size_t t = 0; t < kk; ++t) res.entries.push_back({ids_[rows[t]], scores[rows[t]]});
    return res;
}

std::vector<SearchResult> VectorIndex::batch_search(const std::vector<embed::Vec>& queries, int k,
                                                    int n_threads) const {
    std::vector<SearchResult> out(queries.size());
    if (queries.empty()) return out;
    size_t threads = std::max(1, n_threads);
    threads = std::min(threads, queries.size());
    if (threads == 1) {
        for (size_t i = 0; i < queries.size(); ++i) out[i] = search(queries[i], k);
        return out;
    }
    auto work = [&](size_t t) {
        for (size_t i = t; i < queries.size(); i += threads) out[i] = search(queries[i], k);
    };
    std::vector<std::thread> pool;
    for (size_t t = 1; t < threads; ++t) pool.emplace_back(work, t);
    work(0);
    for (auto& th : pool) th.join();
    return out;
}

namespace {
constexpr char kMagic[8] = {'U', 'M', 'R', 'I', 'D', 'X', '0', '1'};
}

void VectorIndex::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write index file " + path);
    out.write(kMagic, sizeof(kMagic));
    uint64_t n = ids_.size(), d = static_cast<uint64_t>(dim_);
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(&d), sizeof(d));
    out.write(reinterpret_cast<const char*>(matrix_.data()),
              static_cast<std::streamsize>(matrix_.size() * sizeof(double)));
    for (const auto& id : ids_) {
        uint32_t len = static_cast<uint32_t>(id.size());
        out.write(reinterpret_cast<const char*>(&len), sizeof(len));
        out.write(id.data(), len);
    }
    if (!out) throw std::runtime_error("short write on index file " + path);
}

VectorIndex VectorIndex::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open index file " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error(path + ": not an index file");
    uint64_t n = 0, d = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    in.read(reinterpret_cast<char*>(&d), sizeof(d));
    if (!in || n == 0 || d == 0) throw std::runtime_error(path + ": bad index header");
    VectorIndex idx;
    idx.dim_ = static_cast<int>(d);
    idx.matrix_.resize(n * d);
    in.read(reinterpret_cast<char*>(idx.matrix_.data()),
            static_cast<std::streamsize>(n * d * sizeof(double)));
    idx.ids_.reserve(n);
    for (uint64_t i = 0; i < n; ++i) {
        uint32_t len = 0;
        in.read(reinterpret_cast<char*>(&len), sizeof(len));
        std::string id(len, '\0');
        in.read(id.data(), len);
        idx.ids_.push_back(std::move(id));
    }
    if (!in) throw std::runtime_error(path + ": truncated index file");
    return idx;
}

}  // namespace umr::index
