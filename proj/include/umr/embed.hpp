#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "umr/datamodel.hpp"

namespace umr::index {
class VectorIndex;
}

namespace umr::embed {

using Vec = std::vector<double>;

struct TokenHasher {
    uint64_t seed = 42;
    int dim = 256;
};

// Signed feature hashing over the token bag, L2-normalized.
Vec hash_embed(const std::string& text, const TokenHasher& hasher);

void l2_normalize(Vec& v);
double dot(const Vec& a, const Vec& b);

struct TwoTowerModel {
    int d_in = 256;
    int d_out = 128;
    double tau = 0.07;
    uint64_t seed = 0;
    std::vector<double> w_q;  // row-major d_in x d_out
    std::vector<double> w_d;

    bool operator==(const TwoTowerModel&) const = default;
};

// Exact identity projection (d_in == d_out), for tests and algebraic checks.
TwoTowerModel identity_model(int d, double tau = 0.07);

// Identity padded to d_in x d_out plus 1e-3 seeded gaussian noise, the fixed
// training start point: near-identity keeps token-overlap geometry while the
// noise breaks symmetry.
TwoTowerModel initial_model(int d_in, int d_out, double tau, uint64_t seed);

// normalize(W^T x) for a row-major d_in x d_out matrix.
Vec project(const Vec& x, const std::vector<double>& w, int d_in, int d_out);

// Text surface fed to the hasher. Enhanced documents keep their sidecar
// tokens alongside the enhanced text; enhanced queries are self-contained
// text. Un-enhanced image content is represented by sidecar tokens alone.
// Records with fallback=true count as un-enhanced.
std::string document_surface(const data::Document& doc, const data::EnhancedRecord* rec,
                             const data::SidecarStore& sidecars);
std::string query_surface(const data::Query& q, const data::EnhancedRecord* rec,
                          const data::SidecarStore& sidecars);

Vec embed_document(const data::Document& doc, const data::EnhancedRecord* rec,
                   const TwoTowerModel& model, const TokenHasher& hasher,
                   const data::SidecarStore& sidecars);
Vec embed_query(const data::Query& q, const data::EnhancedRecord* rec,
                const TwoTowerModel& model, const TokenHasher& hasher,
                const data::SidecarStore& sidecars);

struct LossGrad {
    double loss = 0.0;
    std::vector<double> d_wq;
    std::vector<double> d_wd;
};

// InfoNCE over B (query, positive) raw D-dim pairs plus M shared extra
// negatives; analytic gradients for both towers. extra_negatives join every
// row's denominator. symmetric adds the doc->query direction on the BxB
// block, averaged with the query->doc direction.
LossGrad infonce_loss(const TwoTowerModel& model, const std::vector<Vec>& q_raw,
                      const std::vector<Vec>& d_raw, const std::vector<Vec>& extra_negatives,
                      bool symmetric = false);

struct TrainConfig {
    double learning_rate = 0.05;
    int batch_size = 32;
    int epochs = 8;
    uint64_t seed = 0;
    double tau = 0.07;
    int hard_negatives_per_query = 0;
    enum class Optimizer { SGD, Adam } optimizer = Optimizer::Adam;
    bool symmetric = false;
};

struct TrainPair {
    std::string query_surface;
    std::string doc_surface;
    std::string pos_did;                // id of doc_surface's document
    std::set<std::string> positives;    // all positives, excluded from mining
};

struct NegativePool {
    std::vector<std::string> dids;
    std::vector<std::string> surfaces;
};

struct TrainLog {
    std::vector<double> epoch_mean_loss;
};

TwoTowerModel train(const TwoTowerModel& init, const std::vector<TrainPair>& pairs,
                    const NegativePool& pool, const TrainConfig& config,
                    const TokenHasher& hasher, TrainLog* log = nullptr);

// Top-n non-positive dids for an already projected query vector.
std::vector<std::string> sample_hard_negatives(const Vec& q_proj,
                                               const std::set<std::string>& positives,
                                               const index::VectorIndex& idx, int n);

void save_checkpoint(const TwoTowerModel& model, const std::string& path);
TwoTowerModel load_checkpoint(const std::string& path);

}  // namespace umr::embed
