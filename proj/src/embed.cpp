#include "umr/embed.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "umr/index.hpp"
#include "umr/util.hpp"

using nlohmann::json;

namespace umr::embed {

Vec hash_embed(const std::string& text, const TokenHasher& hasher) {
    if (hasher.dim < 2) throw std::runtime_error("hasher dim must be >= 2");
    Vec v(static_cast<size_t>(hasher.dim), 0.0);
    for (const auto& tok : util::tokenize(text)) {
        uint64_t bucket = util::fnv1a64(tok, hasher.seed) % static_cast<uint64_t>(hasher.dim);
        uint64_t sign_bit = util::fnv1a64(tok, hasher.seed ^ 0x9E3779B97F4A7C15ull) & 1ull;
        v[bucket] += sign_bit ? 1.0 : -1.0;
    }
    l2_normalize(v);
    return v;
}

void l2_normalize(Vec& v) {
    double ss = 0.0;
    for (double x : v) ss += x * x;
    if (ss == 0.0) return;
    double inv = 1.0 / std::sqrt(ss);
    for (double& x : v) x *= inv;
}

double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::runtime_error("dot: dimension mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

TwoTowerModel identity_model(int d, double tau) {
    TwoTowerModel m;
    m.d_in = d;
    m.d_out = d;
    m.tau = tau;
    m.w_q.assign(static_cast<size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i) m.w_q[static_cast<size_t>(i) * d + i] = 1.0;
    m.w_d = m.w_q;
    return m;
}

TwoTowerModel initial_model(int d_in, int d_out, double tau, uint64_t seed) {
    TwoTowerModel m;
    m.d_in = d_in;
    m.d_out = d_out;
    m.tau = tau;
    m.seed = seed;
    util::SplitMix64 rng(seed);
    auto fill = [&](std::vector<double>& w) {
        w.assign(static_cast<size_t>(d_in) * d_out, 0.0);
        for (int i = 0; i < d_in; ++i)
            for (int j = 0; j < d_out; ++j)
                w[static_cast<size_t>(i) * d_out + j] =
                    (i == j ? 1.0 : 0.0) + 1e-3 * rng.gaussian();
    };
    fill(m.w_q);
    fill(m.w_d);
    return m;
}

Vec project(const Vec& x, const std::vector<double>& w, int d_in, int d_out) {
    if (static_cast<int>(x.size()) != d_in) throw std::runtime_error("project: input dim mismatch");
    if (w.size() != static_cast<size_t>(d_in) * d_out)
        throw std::runtime_error("project: weight shape mismatch");
    Vec a(static_cast<size_t>(d_out), 0.0);
    for (int i = 0; i < d_in; ++i) {
        double xi = x[i];
        if (xi == 0.0) continue;
        const double* row = w.data() + static_cast<size_t>(i) * d_out;
        for (int j = 0; j < d_out; ++j) a[j] += xi * row[j];
    }
    l2_normalize(a);
    return a;
}

namespace {

void append_piece(std::string& s, const std::string& piece) {
    if (piece.empty()) return;
    if (!s.empty()) s += ' ';
    s += piece;
}

std::string sidecar_piece(const data::SidecarStore& sidecars,
                          const std::optional<std::string>& ref) {
    if (!ref) return "";
    return util::join(sidecars.get(*ref), " ");
}

}  // namespace

std::string document_surface(const data::Document& doc, const data::EnhancedRecord* rec,
                             const data::SidecarStore& sidecars) {
    std::string s;
    if (rec && !rec->fallback) {
        append_piece(s, rec->enhanced_text);
    } else if (doc.text) {
        append_piece(s, *doc.text);
    }
    append_piece(s, sidecar_piece(sidecars, doc.image_tokens_ref));
    if (s.empty()) throw std::runtime_error("silent input: document '" + doc.did + "'");
    return s;
}

std::string query_surface(const data::Query& q, const data::EnhancedRecord* rec,
                          const data::SidecarStore& sidecars) {
    std::string s;
    if (rec && !rec->fallback) {
        append_piece(s, rec->enhanced_text);
    } else {
        append_piece(s, q.instruction);
        if (q.text) append_piece(s, *q.text);
        append_piece(s, sidecar_piece(sidecars, q.image_tokens_ref));
    }
    if (s.empty()) throw std::runtime_error("silent input: query '" + q.qid + "'");
    return s;
}

Vec embed_document(const data::Document& doc, const data::EnhancedRecord* rec,
                   const TwoTowerModel& model, const TokenHasher& hasher,
                   const data::SidecarStore& sidecars) {
    if (hasher.dim != model.d_in) throw std::runtime_error("hasher dim != model input dim");
    return project(hash_embed(document_surface(doc, rec, sidecars), hasher), model.w_d,
                   model.d_in, model.d_out);
}

Vec embed_query(const data::Query& q, const data::EnhancedRecord* rec,
                const TwoTowerModel& model, const TokenHasher& hasher,
                const data::SidecarStore& sidecars) {
    if (hasher.dim != model.d_in) throw std::runtime_error("hasher dim != model input dim");
    return project(hash_embed(query_surface(q, rec, sidecars), hasher), model.w_q,
                   model.d_in, model.d_out);
}

namespace {

struct Projected {
    Vec a;       // pre-normalization W^T x
    Vec u;       // normalized
    double norm; // ||a||
};

Projected project_keep(const Vec& x, const std::vector<double>& w, int d_in, int d_out) {
    Projected p;
    p.a.assign(static_cast<size_t>(d_out), 0.0);
    for (int i = 0; i < d_in; ++i) {
        double xi = x[i];
        if (xi == 0.0) continue;
        const double* row = w.data() + static_cast<size_t>(i) * d_out;
        for (int j = 0; j < d_out; ++j) p.a[j] += xi * row[j];
    }
    double ss = 0.0;
    for (double v : p.a) ss += v * v;
    p.norm = std::sqrt(ss);
    p.u = p.a;
    if (p.norm > 0.0) {
        double inv = 1.0 / p.norm;
        for (double& v : p.u) v *= inv;
    }
    return p;
}

// d(a/||a||) pullback: da = (du - u (u . du)) / ||a||.
Vec normalize_backprop(const Projected& p, const Vec& du) {
    Vec da(du.size(), 0.0);
    if (p.norm == 0.0) return da;
    double udu = 0.0;
    for (size_t j = 0; j < du.size(); ++j) udu += p.u[j] * du[j];
    for (size_t j = 0; j < du.size(); ++j) da[j] = (du[j] - p.u[j] * udu) / p.norm;
    return da;
}

void accumulate_outer(std::vector<double>& dw, const Vec& x, const Vec& da, int d_in, int d_out) {
    for (int i = 0; i < d_in; ++i) {
        double xi = x[i];
        if (xi == 0.0) continue;
        double* row = dw.data() + static_cast<size_t>(i) * d_out;
        for (int j = 0; j < d_out; ++j) row[j] += xi * da[j];
    }
}

void check_finite(const std::vector<Vec>& vs, const char* what) {
    for (const auto& v : vs)
        for (double x : v)
            if (!std::isfinite(x)) throw std::runtime_error(std::string("non-finite ") + what);
}

}  // namespace

LossGrad infonce_loss(const TwoTowerModel& model, const std::vector<Vec>& q_raw,
                      const std::vector<Vec>& d_raw, const std::vector<Vec>& extra_negatives,
                      bool symmetric) {
    const size_t B = q_raw.size();
    if (B == 0 || d_raw.size() != B) throw std::runtime_error("infonce_loss: bad batch");
    check_finite(q_raw, "query input");
    check_finite(d_raw, "document input");
    check_finite(extra_negatives, "negative input");

    const int d_in = model.d_in, d_out = model.d_out;
    const size_t M = extra_negatives.size();
    const size_t C = B + M;  // similarity columns
    const double tau = model.tau;

    std::vector<Projected> qp(B), dp(C);
    for (size_t i = 0; i < B; ++i) qp[i] = project_keep(q_raw[i], model.w_q, d_in, d_out);
    for (size_t j = 0; j < B; ++j) dp[j] = project_keep(d_raw[j], model.w_d, d_in, d_out);
    for (size_t j = 0; j < M; ++j)
        dp[B + j] = project_keep(extra_negatives[j], model.w_d, d_in, d_out);

    std::vector<double> s(B * C);
    for (size_t i = 0; i < B; ++i)
        for (size_t j = 0; j < C; ++j) {
            double d = 0.0;
            for (int t = 0; t < d_out; ++t) d += qp[i].u[t] * dp[j].u[t];
            s[i * C + j] = d / tau;
        }

    // g holds dLoss/ds, accumulated across the directions.
    std::vector<double> g(B * C, 0.0);
    double loss = 0.0;
    const double row_weight = symmetric ? 0.5 : 1.0;

    double loss_row = 0.0;
    for (size_t i = 0; i < B; ++i) {
        double mx = s[i * C];
        for (size_t j = 1; j < C; ++j) mx = std::max(mx, s[i * C + j]);
        double denom = 0.0;
        for (size_t j = 0; j < C; ++j) denom += std::exp(s[i * C + j] - mx);
        double log_denom = mx + std::log(denom);
        loss_row += log_denom - s[i * C + i];
        for (size_t j = 0; j < C; ++j) {
            double p = std::exp(s[i * C + j] - mx) / denom;
            g[i * C + j] += row_weight * (p - (i == j ? 1.0 : 0.0)) / static_cast<double>(B);
        }
    }
    loss_row /= static_cast<double>(B);
    loss += row_weight * loss_row;

    if (symmetric) {
        double loss_col = 0.0;
        for (size_t j = 0; j < B; ++j) {
            double mx = s[j];
            for (size_t i = 1; i < B; ++i) mx = std::max(mx, s[i * C + j]);
            double denom = 0.0;
            for (size_t i = 0; i < B; ++i) denom += std::exp(s[i * C + j] - mx);
            double log_denom = mx + std::log(denom);
            loss_col += log_denom - s[j * C + j];
            for (size_t i = 0; i < B; ++i) {
                double p = std::exp(s[i * C + j] - mx) / denom;
                g[i * C + j] += 0.5 * (p - (i == j ? 1.0 : 0.0)) / static_cast<double>(B);
            }
        }
        loss_col /= static_cast<double>(B);
        loss += 0.5 * loss_col;
    }

    if (!std::isfinite(loss)) throw std::runtime_error("infonce_loss: non-finite loss");

    LossGrad out;
    out.loss = loss;
    out.d_wq.assign(model.w_q.size(), 0.0);
    out.d_wd.assign(model.w_d.size(), 0.0);

    for (size_t i = 0; i < B; ++i) {
        Vec du(static_cast<size_t>(d_out), 0.0);
        for (size_t j = 0; j < C; ++j) {
            double gij = g[i * C + j];
            if (gij == 0.0) continue;
            for (int t = 0; t < d_out; ++t) du[t] += gij * dp[j].u[t] / tau;
        }
        Vec da = normalize_backprop(qp[i], du);
        accumulate_outer(out.d_wq, q_raw[i], da, d_in, d_out);
    }
    for (size_t j = 0; j < C; ++j) {
        Vec dv(static_cast<size_t>(d_out), 0.0);
        for (size_t i = 0; i < B; ++i) {
            double gij = g[i * C + j];
            if (gij == 0.0) continue;
            for (int t = 0; t < d_out; ++t) dv[t] += gij * qp[i].u[t] / tau;
        }
        Vec da = normalize_backprop(dp[j], dv);
        const Vec& x = j < B ? d_raw[j] : extra_negatives[j - B];
        accumulate_outer(out.d_wd, x, da, d_in, d_out);
    }
    return out;
}

namespace {

struct AdamState {
    std::vector<double> m, v;
    explicit AdamState(size_t n) : m(n, 0.0), v(n, 0.0) {}
};

void adam_step(std::vector<double>& w, const std::vector<double>& grad, AdamState& st,
               double lr, long step) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
    double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
    for (size_t i = 0; i < w.size(); ++i) {
        st.m[i] = b1 * st.m[i] + (1.0 - b1) * grad[i];
        st.v[i] = b2 * st.v[i] + (1.0 - b2) * grad[i] * grad[i];
        w[i] -= lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + eps);
    }
}

void sgd_step(std::vector<double>& w, const std::vector<double>& grad, double lr) {
    for (size_t i = 0; i < w.size(); ++i) w[i] -= lr * grad[i];
}

}  // namespace

std::vector<std::string> sample_hard_negatives(const Vec& q_proj,
                                               const std::set<std::string>& positives,
                                               const index::VectorIndex& idx, int n) {
    std::vector<std::string> out;
    if (n <= 0 || idx.size() == 0) return out;
    size_t k = std::min(idx.size(), static_cast<size_t>(n) + positives.size());
    auto pick = [&](const index::SearchResult& res) {
        out.clear();
        for (const auto& e : res.entries) {
            if (positives.count(e.did)) continue;
            out.push_back(e.did);
            if (out.size() == static_cast<size_t>(n)) break;
        }
    };
    pick(idx.search(q_proj, static_cast<int>(k)));
    if (out.size() < static_cast<size_t>(n) && k < idx.size())
        pick(idx.search(q_proj, static_cast<int>(idx.size())));
    return out;
}

TwoTowerModel train(const TwoTowerModel& init, const std::vector<TrainPair>& pairs,
                    const NegativePool& pool, const TrainConfig& config,
                    const TokenHasher& hasher, TrainLog* log) {
    if (config.batch_size < 1) throw std::runtime_error("train: batch_size must be >= 1");
    if (config.epochs < 0) throw std::runtime_error("train: epochs must be >= 0");
    if (pairs.empty() && config.epochs > 0) throw std::runtime_error("train: no pairs");
    if (pool.dids.size() != pool.surfaces.size())
        throw std::runtime_error("train: negative pool ids/surfaces length mismatch");

    TwoTowerModel model = init;
    model.tau = config.tau;
    model.seed = config.seed;
    if (log) log->epoch_mean_loss.clear();

    const size_t n = pairs.size();
    std::vector<Vec> q_raws(n), d_raws(n);
    for (size_t i = 0; i < n; ++i) {
        q_raws[i] = hash_embed(pairs[i].query_surface, hasher);
        d_raws[i] = hash_embed(pairs[i].doc_surface, hasher);
    }
    const bool mine = config.hard_negatives_per_query > 0 && !pool.dids.empty();
    std::vector<Vec> pool_raws;
    if (mine) {
        pool_raws.resize(pool.dids.size());
        for (size_t i = 0; i < pool.dids.size(); ++i)
            pool_raws[i] = hash_embed(pool.surfaces[i], hasher);
    }

    util::SplitMix64 rng(config.seed);
    AdamState adam_q(model.w_q.size()), adam_d(model.w_d.size());
    long step = 0;

    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // Hard negatives are re-mined at each epoch start under the current
        // model, so the pool tracks the moving embedding space.
        std::vector<std::vector<std::string>> mined(n);
        std::map<std::string, size_t> pool_row;
        if (mine) {
            std::vector<std::pair<std::string, Vec>> rows;
            rows.reserve(pool.dids.size());
            for (size_t i = 0; i < pool.dids.size(); ++i) {
                pool_row[pool.dids[i]] = i;
                rows.emplace_back(pool.dids[i],
                                  project(pool_raws[i], model.w_d, model.d_in, model.d_out));
            }
            auto idx = index::VectorIndex::build(rows);
            for (size_t i = 0; i < n; ++i) {
                Vec qp = project(q_raws[i], model.w_q, model.d_in, model.d_out);
                mined[i] = sample_hard_negatives(qp, pairs[i].positives, idx,
                                                 config.hard_negatives_per_query);
            }
        }

        util::shuffle(order, rng);
        double loss_sum = 0.0;
        for (size_t start = 0; start < n; start += static_cast<size_t>(config.batch_size)) {
            size_t end = std::min(n, start + static_cast<size_t>(config.batch_size));
            std::vector<Vec> bq, bd, extras;
            std::set<std::string> extra_ids;
            for (size_t t = start; t < end; ++t) {
                size_t i = order[t];
                bq.push_back(q_raws[i]);
                bd.push_back(d_raws[i]);
                if (mine)
                    for (const auto& did : mined[i])
                        if (extra_ids.insert(did).second)
                            extras.push_back(pool_raws[pool_row.at(did)]);
            }
            LossGrad lg;
            try {
                lg = infonce_loss(model, bq, bd, extras, config.symmetric);
            } catch (const std::exception& e) {
                throw std::runtime_error("train: epoch " + std::to_string(epoch) + " step " +
                                         std::to_string(step) + ": " + e.what());
            }
            loss_sum += lg.loss * static_cast<double>(bq.size());
            ++step;
            if (config.optimizer == TrainConfig::Optimizer::Adam) {
                adam_step(model.w_q, lg.d_wq, adam_q, config.learning_rate, step);
                adam_step(model.w_d, lg.d_wd, adam_d, config.learning_rate, step);
            } else {
                sgd_step(model.w_q, lg.d_wq, config.learning_rate);
                sgd_step(model.w_d, lg.d_wd, config.learning_rate);
            }
        }
        if (log) log->epoch_mean_loss.push_back(loss_sum / static_cast<double>(n));
    }
    return model;
}

void save_checkpoint(const TwoTowerModel& model, const std::string& path) {
    json j{{"version", 1},
           {"dim", model.d_in},
           {"proj_dim", model.d_out},
           {"tau", model.tau},
           {"seed", model.seed},
           {"w_q", model.w_q},
           {"w_d", model.w_d}};
    util::write_file(path, j.dump() + "\n");
}

TwoTowerModel load_checkpoint(const std::string& path) {
    json j = json::parse(util::read_file(path), nullptr, false);
    if (j.is_discarded()) throw std::runtime_error(path + ": malformed checkpoint");
    TwoTowerModel m;
    try {
        if (j.at("version").get<int>() != 1) throw std::runtime_error("unsupported version");
        m.d_in = j.at("dim").get<int>();
        m.d_out = j.at("proj_dim").get<int>();
        m.tau = j.at("tau").get<double>();
        m.seed = j.at("seed").get<uint64_t>();
        m.w_q = j.at("w_q").get<std::vector<double>>();
        m.w_d = j.at("w_d").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": bad checkpoint: " + e.what());
    }
    if (m.tau <= 0) throw std::runtime_error(path + ": tau must be positive");
    if (m.w_q.size() != static_cast<size_t>(m.d_in) * m.d_out || m.w_d.size() != m.w_q.size())
        throw std::runtime_error(path + ": weight shape mismatch");
    return m;
}

}  // namespace umr::embed
