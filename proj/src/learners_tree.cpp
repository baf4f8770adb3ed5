#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numeric>
#include <thread>

#include "gumdrop/learners.hpp"

namespace gumdrop {

namespace {

// Deterministic helpers independent of std distribution implementations.
uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    uint64_t x = seed ^ (0x9E3779B97F4A7C15ull * (salt + 1));
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

struct Rng {
    uint64_t state;
    explicit Rng(uint64_t seed) : state(seed ? seed : 0x853C49E6748FEA9Bull) {}
    uint64_t next() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        return state;
    }
    size_t index(size_t n) { return n ? next() % n : 0; }
    double unit() { return double(next() >> 11) * 0x1.0p-53; }
};

struct TrainMatrix {
    std::vector<std::vector<float>> cols;  // [feature][row]
    std::vector<char> is_binary;
    int n = 0, d = 0;
};

TrainMatrix build_matrix(const Dataset& ds, const OneHotEncoding& enc) {
    TrainMatrix m;
    m.n = static_cast<int>(ds.size());
    m.d = enc.width;
    m.cols.assign(m.d, std::vector<float>(m.n, 0.0f));
    for (int i = 0; i < m.n; ++i) {
        auto x = encode(ds.records[i], enc);
        for (int j = 0; j < m.d; ++j) m.cols[j][i] = static_cast<float>(x[j]);
    }
    m.is_binary.assign(m.d, 1);
    for (int j = 0; j < m.d; ++j)
        for (int i = 0; i < m.n; ++i)
            if (m.cols[j][i] != 0.0f && m.cols[j][i] != 1.0f) {
                m.is_binary[j] = 0;
                break;
            }
    return m;
}

struct SplitResult {
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;  // larger is better
    bool valid = false;
};

struct BuildCfg {
    bool classify = true;
    int n_classes = 2;
    int max_depth = 12;
    int min_leaf = 1;
    int n_candidates = 0;  // 0 = all features
    bool random_threshold = false;
    double leaf_l2 = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const TrainMatrix& m, const BuildCfg& cfg, Rng rng)
        : m_(m), cfg_(cfg), rng_(rng), feat_ids_(m.d) {
        std::iota(feat_ids_.begin(), feat_ids_.end(), 0);
    }

    Tree build_classifier(std::vector<int> idx, const std::vector<int>& y) {
        y_ = &y;
        g_ = h_ = nullptr;
        Tree t;
        grow(t, idx, 0, static_cast<int>(idx.size()), 0);
        return t;
    }

    Tree build_regressor(std::vector<int> idx, const std::vector<double>& g,
                         const std::vector<double>& h) {
        y_ = nullptr;
        g_ = &g;
        h_ = &h;
        Tree t;
        grow(t, idx, 0, static_cast<int>(idx.size()), 0);
        return t;
    }

private:
    const TrainMatrix& m_;
    BuildCfg cfg_;
    Rng rng_;
    std::vector<int> feat_ids_;

    const std::vector<int>* y_ = nullptr;
    const std::vector<double>* g_ = nullptr;
    const std::vector<double>* h_ = nullptr;

    int make_leaf(Tree& t, const std::vector<int>& idx, int lo, int hi) {
        TreeNode node;
        const int n = hi - lo;
        if (cfg_.classify) {
            node.dist.assign(cfg_.n_classes, 0.0);
            for (int i = lo; i < hi; ++i) node.dist[(*y_)[idx[i]]] += 1.0;
            for (double& v : node.dist) v /= double(n);
        } else {
            double sg = 0, sh = 0;
            for (int i = lo; i < hi; ++i) {
                sg += (*g_)[idx[i]];
                sh += (*h_)[idx[i]];
            }
            node.value = sg / (sh + cfg_.leaf_l2 + 1e-16);
        }
        t.nodes.push_back(std::move(node));
        return static_cast<int>(t.nodes.size()) - 1;
    }

    bool node_is_pure(const std::vector<int>& idx, int lo, int hi) const {
        if (!cfg_.classify) return false;
        int first = (*y_)[idx[lo]];
        for (int i = lo + 1; i < hi; ++i)
            if ((*y_)[idx[i]] != first) return false;
        return true;
    }

    // Score to maximize: sum over children of (class-count sumsq / n) for
    // Gini, or (gradient-sum squared / n) for variance reduction.
    double base_score(const std::vector<int>& idx, int lo, int hi) const {
        if (cfg_.classify) {
            std::vector<int64_t> counts(cfg_.n_classes, 0);
            for (int i = lo; i < hi; ++i) counts[(*y_)[idx[i]]]++;
            double s = 0;
            for (int64_t c : counts) s += double(c) * double(c);
            return s / double(hi - lo);
        }
        double s = 0;
        for (int i = lo; i < hi; ++i) s += (*g_)[idx[i]];
        return s * s / double(hi - lo);
    }

    SplitResult eval_threshold(const std::vector<int>& idx, int lo, int hi, int feat, double thr) const {
        const auto& col = m_.cols[feat];
        SplitResult r;
        const int n = hi - lo;
        if (cfg_.classify) {
            std::vector<int64_t> cl(cfg_.n_classes, 0), cr(cfg_.n_classes, 0);
            int nl = 0;
            for (int i = lo; i < hi; ++i) {
                if (col[idx[i]] < thr) {
                    cl[(*y_)[idx[i]]]++;
                    ++nl;
                } else {
                    cr[(*y_)[idx[i]]]++;
                }
            }
            int nr = n - nl;
            if (nl < cfg_.min_leaf || nr < cfg_.min_leaf) return r;
            double sl = 0, sr = 0;
            for (int k = 0; k < cfg_.n_classes; ++k) {
                sl += double(cl[k]) * double(cl[k]);
                sr += double(cr[k]) * double(cr[k]);
            }
            r.score = sl / nl + sr / nr;
        } else {
            double gl = 0, gr = 0;
            int nl = 0;
            for (int i = lo; i < hi; ++i) {
                if (col[idx[i]] < thr) {
                    gl += (*g_)[idx[i]];
                    ++nl;
                } else {
                    gr += (*g_)[idx[i]];
                }
            }
            int nr = n - nl;
            if (nl < cfg_.min_leaf || nr < cfg_.min_leaf) return r;
            r.score = gl * gl / nl + gr * gr / nr;
        }
        r.feature = feat;
        r.threshold = thr;
        r.valid = true;
        return r;
    }

    SplitResult best_split_sorted(const std::vector<int>& idx, int lo, int hi, int feat) const {
        const auto& col = m_.cols[feat];
        const int n = hi - lo;
        std::vector<std::pair<float, int>> vals(n);
        for (int i = 0; i < n; ++i) vals[i] = {col[idx[lo + i]], idx[lo + i]};
        std::sort(vals.begin(), vals.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        SplitResult best;
        if (cfg_.classify) {
            std::vector<int64_t> cl(cfg_.n_classes, 0), cr(cfg_.n_classes, 0);
            for (int i = 0; i < n; ++i) cr[(*y_)[vals[i].second]]++;
            double sl = 0, sr = 0;
            for (int64_t c : cr) sr += double(c) * double(c);
            for (int i = 0; i < n - 1; ++i) {
                int yv = (*y_)[vals[i].second];
                sl += 2.0 * double(cl[yv]) + 1.0;
                sr -= 2.0 * double(cr[yv]) - 1.0;
                cl[yv]++;
                cr[yv]--;
                if (vals[i].first == vals[i + 1].first) continue;
                int nl = i + 1, nr = n - nl;
                if (nl < cfg_.min_leaf || nr < cfg_.min_leaf) continue;
                double score = sl / nl + sr / nr;
                if (!best.valid || score > best.score + 1e-12) {
                    best.valid = true;
                    best.score = score;
                    best.feature = feat;
                    best.threshold = 0.5 * (double(vals[i].first) + double(vals[i + 1].first));
                }
            }
        } else {
            double gl = 0, gr = 0;
            for (int i = 0; i < n; ++i) gr += (*g_)[vals[i].second];
            for (int i = 0; i < n - 1; ++i) {
                double gv = (*g_)[vals[i].second];
                gl += gv;
                gr -= gv;
                if (vals[i].first == vals[i + 1].first) continue;
                int nl = i + 1, nr = n - nl;
                if (nl < cfg_.min_leaf || nr < cfg_.min_leaf) continue;
                double score = gl * gl / nl + gr * gr / nr;
                if (!best.valid || score > best.score + 1e-12) {
                    best.valid = true;
                    best.score = score;
                    best.feature = feat;
                    best.threshold = 0.5 * (double(vals[i].first) + double(vals[i + 1].first));
                }
            }
        }
        return best;
    }

    SplitResult find_split(const std::vector<int>& idx, int lo, int hi) {
        int n_cand = cfg_.n_candidates > 0 ? std::min(cfg_.n_candidates, m_.d) : m_.d;
        // Partial Fisher-Yates for a deterministic feature sample.
        for (int i = 0; i < n_cand; ++i) {
            size_t j = i + rng_.index(feat_ids_.size() - i);
            std::swap(feat_ids_[i], feat_ids_[j]);
        }
        SplitResult best;
        const double parent = base_score(idx, lo, hi);
        for (int c = 0; c < n_cand; ++c) {
            const int feat = feat_ids_[c];
            SplitResult r;
            if (cfg_.random_threshold) {
                const auto& col = m_.cols[feat];
                float mn = col[idx[lo]], mx = col[idx[lo]];
                for (int i = lo; i < hi; ++i) {
                    mn = std::min(mn, col[idx[i]]);
                    mx = std::max(mx, col[idx[i]]);
                }
                if (mn == mx) continue;
                double thr = mn + rng_.unit() * (double(mx) - double(mn));
                if (thr <= mn) thr = std::nextafter(double(mn), double(mx));
                r = eval_threshold(idx, lo, hi, feat, thr);
            } else if (m_.is_binary[feat]) {
                r = eval_threshold(idx, lo, hi, feat, 0.5);
            } else {
                r = best_split_sorted(idx, lo, hi, feat);
            }
            if (r.valid && r.score > parent + 1e-12 && (!best.valid || r.score > best.score + 1e-12))
                best = r;
        }
        return best;
    }

    int grow(Tree& t, std::vector<int>& idx, int lo, int hi, int depth) {
        const int n = hi - lo;
        if (n < 2 * cfg_.min_leaf || depth >= cfg_.max_depth || node_is_pure(idx, lo, hi))
            return make_leaf(t, idx, lo, hi);
        SplitResult split = find_split(idx, lo, hi);
        if (!split.valid) return make_leaf(t, idx, lo, hi);
        const auto& col = m_.cols[split.feature];
        auto mid_it = std::partition(idx.begin() + lo, idx.begin() + hi,
                                     [&](int i) { return col[i] < split.threshold; });
        int mid = static_cast<int>(mid_it - idx.begin());
        if (mid == lo || mid == hi) return make_leaf(t, idx, lo, hi);

        TreeNode node;
        node.feature = split.feature;
        node.threshold = split.threshold;
        t.nodes.push_back(std::move(node));
        int self = static_cast<int>(t.nodes.size()) - 1;
        int left = grow(t, idx, lo, mid, depth + 1);
        int right = grow(t, idx, mid, hi, depth + 1);
        t.nodes[self].left = left;
        t.nodes[self].right = right;
        return self;
    }
};

double leaf_value_for_row(const Tree& t, const TrainMatrix& m, int row) {
    int i = 0;
    while (t.nodes[i].left >= 0)
        i = m.cols[t.nodes[i].feature][row] < t.nodes[i].threshold ? t.nodes[i].left : t.nodes[i].right;
    return t.nodes[i].value;
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, jobs);
    if (jobs == 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> threads;
    std::atomic<int> next{0};
    for (int t = 0; t < std::min(jobs, n); ++t)
        threads.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : threads) th.join();
}

std::unique_ptr<TrainedModel> train_forest(const Dataset& ds, ModelKind kind, const TreeParams& params) {
    auto model = std::make_unique<ForestModel>(kind, ds.schema.fingerprint(), ds.classes);
    model->enc = OneHotEncoding::build(ds.schema);
    TrainMatrix m = build_matrix(ds, model->enc);

    BuildCfg cfg;
    cfg.classify = true;
    cfg.n_classes = static_cast<int>(ds.classes.size());
    cfg.max_depth = params.max_depth;
    cfg.min_leaf = params.min_leaf;
    cfg.random_threshold = kind == ModelKind::extratrees;
    cfg.n_candidates =
        kind == ModelKind::tree ? 0 : std::max(1, static_cast<int>(std::ceil(std::sqrt(double(m.d)))));

    const int n_trees = kind == ModelKind::tree ? 1 : params.n_trees;
    model->trees.resize(n_trees);
    parallel_for(n_trees, params.jobs, [&](int t) {
        Rng rng(mix_seed(params.seed, t));
        std::vector<int> idx(m.n);
        if (kind == ModelKind::forest) {
            for (int i = 0; i < m.n; ++i) idx[i] = static_cast<int>(rng.index(m.n));
        } else {
            std::iota(idx.begin(), idx.end(), 0);
        }
        TreeBuilder builder(m, cfg, rng);
        model->trees[t] = builder.build_classifier(std::move(idx), ds.labels);
    });
    return model;
}

double gbt_loss(const std::vector<std::vector<double>>& margins,
                const std::vector<std::vector<char>>& targets) {
    double loss = 0;
    const size_t n = margins[0].size();
    for (size_t s = 0; s < margins.size(); ++s) {
        for (size_t i = 0; i < n; ++i) {
            double p = 1.0 / (1.0 + std::exp(-margins[s][i]));
            p = std::clamp(p, 1e-12, 1.0 - 1e-12);
            loss -= targets[s][i] ? std::log(p) : std::log(1.0 - p);
        }
    }
    return loss / double(n);
}

std::unique_ptr<TrainedModel> train_gbt(const Dataset& ds, const TreeParams& params) {
    const int K = static_cast<int>(ds.classes.size());
    auto model = std::make_unique<GbtModel>(ds.schema.fingerprint(), ds.classes);
    model->enc = OneHotEncoding::build(ds.schema);
    model->n_stacks = K == 2 ? 1 : K;

    std::vector<char> present(K, 0);
    for (int l : ds.labels) present.at(l) = 1;
    if (std::accumulate(present.begin(), present.end(), 0) <= 1) {
        model->constant = true;
        model->constant_probs.assign(K, 0.0);
        model->constant_probs[ds.labels.empty() ? 0 : ds.labels[0]] = 1.0;
        return model;
    }

    TrainMatrix m = build_matrix(ds, model->enc);
    const int n = m.n;
    const int S = model->n_stacks;

    std::vector<std::vector<char>> targets(S, std::vector<char>(n, 0));
    for (int i = 0; i < n; ++i) {
        if (S == 1)
            targets[0][i] = ds.labels[i] == 1;
        else
            targets[ds.labels[i]][i] = 1;
    }
    model->base_margin.resize(S);
    for (int s = 0; s < S; ++s) {
        double pos = 0;
        for (int i = 0; i < n; ++i) pos += targets[s][i];
        double p = std::clamp(pos / n, 1e-6, 1.0 - 1e-6);
        model->base_margin[s] = std::log(p / (1.0 - p));
    }
    std::vector<std::vector<double>> margins(S, std::vector<double>(n));
    for (int s = 0; s < S; ++s) std::fill(margins[s].begin(), margins[s].end(), model->base_margin[s]);

    BuildCfg cfg;
    cfg.classify = false;
    cfg.max_depth = params.max_depth;
    cfg.min_leaf = params.min_leaf;
    cfg.leaf_l2 = params.leaf_l2;
    cfg.n_candidates = params.colsample < 1.0
                           ? std::max(1, static_cast<int>(std::ceil(params.colsample * m.d)))
                           : 0;

    double cur_loss = gbt_loss(margins, targets);
    model->train_loss.push_back(cur_loss);

    std::vector<double> g(n), h(n);
    std::vector<int> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    for (int stage = 0; stage < params.n_trees; ++stage) {
        Rng stage_rng(mix_seed(params.seed, 1000003ull * (stage + 1)));
        std::vector<int> subset = rows;
        if (params.subsample < 1.0) {
            int keep = std::max(1, static_cast<int>(params.subsample * n));
            for (int i = 0; i < keep; ++i) {
                size_t j = i + stage_rng.index(subset.size() - i);
                std::swap(subset[i], subset[j]);
            }
            subset.resize(keep);
            std::sort(subset.begin(), subset.end());
        }
        std::vector<Tree> stage_trees(S);
        for (int s = 0; s < S; ++s) {
            for (int i = 0; i < n; ++i) {
                double p = 1.0 / (1.0 + std::exp(-margins[s][i]));
                g[i] = double(targets[s][i]) - p;
                h[i] = std::max(p * (1.0 - p), 1e-12);
            }
            TreeBuilder builder(m, cfg, Rng(mix_seed(params.seed, 7919ull * (stage + 1) + s)));
            stage_trees[s] = builder.build_regressor(subset, g, h);
        }
        // Shrinkage with step halving keeps the training loss non-increasing.
        std::vector<std::vector<double>> deltas(S, std::vector<double>(n));
        for (int s = 0; s < S; ++s)
            for (int i = 0; i < n; ++i) deltas[s][i] = leaf_value_for_row(stage_trees[s], m, i);
        double scale = params.learning_rate;
        std::vector<std::vector<double>> trial = margins;
        double new_loss = cur_loss;
        bool accepted = false;
        for (int attempt = 0; attempt < 24; ++attempt) {
            for (int s = 0; s < S; ++s)
                for (int i = 0; i < n; ++i) trial[s][i] = margins[s][i] + scale * deltas[s][i];
            new_loss = gbt_loss(trial, targets);
            if (new_loss <= cur_loss + 1e-12) {
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if (!accepted) break;  // no usable descent direction left
        for (int s = 0; s < S; ++s)
            for (auto& node : stage_trees[s].nodes)
                if (node.left < 0) node.value *= scale;
        margins.swap(trial);
        cur_loss = new_loss;
        model->stages.push_back(std::move(stage_trees));
        model->train_loss.push_back(cur_loss);
    }
    return model;
}

}  // namespace

std::unique_ptr<TrainedModel> train_tree_ensemble(const Dataset& ds, ModelKind kind,
                                                  const TreeParams& params) {
    if (ds.records.empty()) throw TrainError("train_tree_ensemble: empty dataset");
    if (ds.labels.size() != ds.size()) throw TrainError("train_tree_ensemble: labels missing");
    if (params.max_depth <= 0) throw TrainError("train_tree_ensemble: max_depth must be >= 1");
    if (params.n_trees < 1) throw TrainError("train_tree_ensemble: n_trees must be >= 1");
    switch (kind) {
        case ModelKind::tree:
        case ModelKind::forest:
        case ModelKind::extratrees:
            return train_forest(ds, kind, params);
        case ModelKind::gbt:
            return train_gbt(ds, params);
        default:
            throw TrainError("train_tree_ensemble handles tree, forest, extratrees and gbt");
    }
}

}  // namespace gumdrop
