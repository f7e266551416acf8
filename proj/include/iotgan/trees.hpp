#pragma once

// Supervised baselines: a bagged random forest of Gini trees and logistic
// gradient boosting over small regression trees. Samples are matrix columns,
// the same layout the GAN uses.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iotgan/seed.hpp"

namespace iotgan::trees {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

class EmptyDataset : public std::invalid_argument {
public:
    EmptyDataset() : std::invalid_argument("training set is empty") {}
};

class SingleClassData : public std::invalid_argument {
public:
    SingleClassData() : std::invalid_argument("training labels contain a single class") {}
};

class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Node {
    int feature = -1;   // -1 marks a leaf
    double threshold = 0;
    int left = -1;      // taken when x[feature] <= threshold
    int right = -1;
    double value = 0;

    bool is_leaf() const { return feature < 0; }
    friend bool operator==(const Node&, const Node&) = default;
};

struct Tree {
    std::vector<Node> nodes;

    double eval(const double* x) const {
        int i = 0;
        while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
            const Node& n = nodes[static_cast<std::size_t>(i)];
            i = x[n.feature] <= n.threshold ? n.left : n.right;
        }
        return nodes[static_cast<std::size_t>(i)].value;
    }

    int depth() const { return depth_from(0); }

    friend bool operator==(const Tree&, const Tree&) = default;

private:
    int depth_from(int i) const {
        const Node& n = nodes[static_cast<std::size_t>(i)];
        if (n.is_leaf()) return 0;
        return 1 + std::max(depth_from(n.left), depth_from(n.right));
    }
};

namespace detail {

struct Split {
    int feature = -1;
    double threshold = 0;
    double gain = 0;
};

/// Best split of `idx` over `features` by squared-error reduction of `target`.
/// For 0/1 targets this is the same ordering as Gini impurity. Candidate
/// thresholds are midpoints between consecutive distinct values; only a
/// strictly better split replaces the incumbent, so ties go to the lower
/// feature index and then the lower threshold.
inline Split best_split(const MatrixXd& X, std::span<const double> target, std::span<const Index> idx,
                        std::span<const int> features, std::size_t min_child) {
    const std::size_t n = idx.size();
    double total = 0;
    for (Index i : idx) total += target[static_cast<std::size_t>(i)];
    const double parent = total * total / static_cast<double>(n);
    const double tol = 1e-12 * std::max(1.0, std::abs(parent));

    Split best;
    std::vector<std::pair<double, Index>> col(n);
    for (int f : features) {
        for (std::size_t k = 0; k < n; ++k) col[k] = {X(f, idx[k]), idx[k]};
        std::sort(col.begin(), col.end());
        double left = 0;
        for (std::size_t k = 1; k < n; ++k) {
            left += target[static_cast<std::size_t>(col[k - 1].second)];
            if (k < min_child || n - k < min_child) continue;
            const double a = col[k - 1].first, b = col[k].first;
            if (!(a < b)) continue;
            const double right = total - left;
            const double nl = static_cast<double>(k), nr = static_cast<double>(n - k);
            const double gain = left * left / nl + right * right / nr - parent;
            if (gain > tol && gain > best.gain) {
                double mid = a + (b - a) / 2;
                if (!(mid < b)) mid = a;
                best = {f, mid, gain};
            }
        }
    }
    return best;
}

struct GrowConfig {
    int max_depth = 8;
    std::size_t min_samples_split = 2;
    std::size_t min_child = 1;
    int features_per_split = 0;  // 0 = all
};

/// Grows a tree depth-first. `leaf_value` maps the samples reaching a leaf to
/// its output.
inline Tree grow(const MatrixXd& X, std::span<const double> target, std::vector<Index> root, const GrowConfig& cfg,
                 std::mt19937_64* rng, const std::function<double(std::span<const Index>)>& leaf_value) {
    const int d = static_cast<int>(X.rows());
    std::vector<int> all(static_cast<std::size_t>(d));
    std::iota(all.begin(), all.end(), 0);

    Tree tree;
    struct Pending {
        int node;
        int depth;
        std::vector<Index> idx;
    };
    std::vector<Pending> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, 0, std::move(root)});
    while (!stack.empty()) {
        Pending p = std::move(stack.back());
        stack.pop_back();

        Split s;
        if (p.depth < cfg.max_depth && p.idx.size() >= cfg.min_samples_split) {
            std::vector<int> feats = all;
            if (cfg.features_per_split > 0 && cfg.features_per_split < d && rng) {
                for (int i = 0; i < cfg.features_per_split; ++i) {
                    std::uniform_int_distribution<int> pick(i, d - 1);
                    std::swap(feats[static_cast<std::size_t>(i)], feats[static_cast<std::size_t>(pick(*rng))]);
                }
                feats.resize(static_cast<std::size_t>(cfg.features_per_split));
                std::sort(feats.begin(), feats.end());
            }
            s = best_split(X, target, p.idx, feats, cfg.min_child);
        }
        if (s.feature < 0) {
            tree.nodes[static_cast<std::size_t>(p.node)].value = leaf_value(p.idx);
            continue;
        }
        std::vector<Index> l, r;
        for (Index i : p.idx) (X(s.feature, i) <= s.threshold ? l : r).push_back(i);
        const int li = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        Node& n = tree.nodes[static_cast<std::size_t>(p.node)];
        n.feature = s.feature;
        n.threshold = s.threshold;
        n.left = li;
        n.right = li + 1;
        stack.push_back({li + 1, p.depth + 1, std::move(r)});
        stack.push_back({li, p.depth + 1, std::move(l)});
    }
    return tree;
}

inline void check_labels(const MatrixXd& X, std::span<const int> y) {
    if (X.cols() == 0 || y.empty()) throw EmptyDataset();
    if (static_cast<std::size_t>(X.cols()) != y.size())
        throw DimensionMismatch("sample count " + std::to_string(X.cols()) + " != label count " +
                                std::to_string(y.size()));
    bool pos = false, neg = false;
    for (int v : y) {
        if (v != 0 && v != 1) throw std::invalid_argument("labels must be 0 or 1");
        (v ? pos : neg) = true;
    }
    if (!pos || !neg) throw SingleClassData();
}

inline void check_input(Index expected, Index got) {
    if (expected != got)
        throw DimensionMismatch("expected " + std::to_string(expected) + " features, got " + std::to_string(got));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Random forest.

struct ForestConfig {
    int n_trees = 100;
    int max_depth = 8;
    std::size_t min_samples_split = 2;
    int feature_subsample = 0;  // 0 = round(sqrt(d))
    std::uint64_t seed = 0;

    void validate() const {
        if (n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
        if (max_depth < 0) throw std::invalid_argument("max_depth must be >= 0");
        if (min_samples_split < 2) throw std::invalid_argument("min_samples_split must be >= 2");
        if (feature_subsample < 0) throw std::invalid_argument("feature_subsample must be >= 0");
    }
};

struct ForestModel {
    std::vector<Tree> trees;
    std::vector<std::uint64_t> tree_seeds;
    Index feature_dim = 0;

    friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

inline ForestModel train_forest(const MatrixXd& X, std::span<const int> y, const ForestConfig& cfg = {}) {
    cfg.validate();
    detail::check_labels(X, y);
    const Index n = X.cols();
    std::vector<double> target(y.begin(), y.end());

    detail::GrowConfig g;
    g.max_depth = cfg.max_depth;
    g.min_samples_split = cfg.min_samples_split;
    g.features_per_split = cfg.feature_subsample > 0
                               ? cfg.feature_subsample
                               : static_cast<int>(std::lround(std::sqrt(static_cast<double>(X.rows()))));
    auto frequency = [&](std::span<const Index> idx) {
        double pos = 0;
        for (Index i : idx) pos += target[static_cast<std::size_t>(i)];
        return pos / static_cast<double>(idx.size());
    };

    ForestModel m;
    m.feature_dim = X.rows();
    for (int t = 0; t < cfg.n_trees; ++t) {
        const std::uint64_t seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(t));
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<Index> draw(0, n - 1);
        std::vector<Index> boot(static_cast<std::size_t>(n));
        for (auto& i : boot) i = draw(rng);
        m.trees.push_back(detail::grow(X, target, std::move(boot), g, &rng, frequency));
        m.tree_seeds.push_back(seed);
    }
    return m;
}

inline double predict(const ForestModel& m, const VectorXd& x) {
    detail::check_input(m.feature_dim, x.size());
    double sum = 0;
    for (const auto& t : m.trees) sum += t.eval(x.data());
    return sum / static_cast<double>(m.trees.size());
}

// ---------------------------------------------------------------------------
// Gradient boosting.

struct BoostConfig {
    int n_rounds = 100;
    int max_depth = 3;
    double shrinkage = 0.1;
    std::size_t min_samples_split = 2;
    std::uint64_t seed = 0;  // the fit is deterministic; kept for the checkpoint record

    void validate() const {
        if (n_rounds < 1) throw std::invalid_argument("n_rounds must be >= 1");
        if (max_depth < 0) throw std::invalid_argument("max_depth must be >= 0");
        if (!(shrinkage > 0.0)) throw std::invalid_argument("shrinkage must be positive");
        if (min_samples_split < 2) throw std::invalid_argument("min_samples_split must be >= 2");
    }
};

struct BoostModel {
    std::vector<Tree> trees;
    double init = 0;  // log-odds
    double shrinkage = 0.1;
    Index feature_dim = 0;

    friend bool operator==(const BoostModel&, const BoostModel&) = default;
};

inline double sigmoid(double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

/// -[y log p + (1-y) log(1-p)] with p = sigmoid(f), written to avoid log(0).
inline double log_loss(double f, int y) {
    const double s = y ? -f : f;
    return s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

inline double mean_log_loss(std::span<const double> f, std::span<const int> y) {
    double s = 0;
    for (std::size_t i = 0; i < f.size(); ++i) s += log_loss(f[i], y[i]);
    return s / static_cast<double>(f.size());
}

/// Regression tree on `residual` whose leaves take the Newton step
/// sum(residual) / sum(hessian). Each leaf's step is halved until the
/// log-loss of its own samples does not increase (zero if nothing works), so
/// the total training loss never rises.
inline Tree fit_round(const MatrixXd& X, std::span<const int> y, std::span<const double> f,
                      std::span<const double> residual, std::span<const double> hessian, double shrinkage,
                      const detail::GrowConfig& g) {
    auto leaf = [&](std::span<const Index> idx) {
        double sr = 0, sh = 0;
        for (Index i : idx) {
            sr += residual[static_cast<std::size_t>(i)];
            sh += hessian[static_cast<std::size_t>(i)];
        }
        if (sr == 0.0 || !(sh > 0.0)) return 0.0;
        double v = sr / sh;
        double before = 0;
        for (Index i : idx) before += log_loss(f[static_cast<std::size_t>(i)], y[static_cast<std::size_t>(i)]);
        for (int k = 0; k < 40; ++k, v /= 2) {
            double after = 0;
            for (Index i : idx)
                after += log_loss(f[static_cast<std::size_t>(i)] + shrinkage * v, y[static_cast<std::size_t>(i)]);
            if (after <= before) return v;
        }
        return 0.0;
    };
    std::vector<Index> all(static_cast<std::size_t>(X.cols()));
    std::iota(all.begin(), all.end(), Index{0});
    return detail::grow(X, residual, std::move(all), g, nullptr, leaf);
}

/// When `loss_trace` is given it receives the training log-loss before the
/// first round and after every round.
inline BoostModel train_boost(const MatrixXd& X, std::span<const int> y, const BoostConfig& cfg = {},
                              std::vector<double>* loss_trace = nullptr) {
    cfg.validate();
    detail::check_labels(X, y);
    const auto n = static_cast<std::size_t>(X.cols());
    const double pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
    const double base = pos / static_cast<double>(n);

    BoostModel m;
    m.feature_dim = X.rows();
    m.shrinkage = cfg.shrinkage;
    m.init = std::log(base / (1.0 - base));

    detail::GrowConfig g;
    g.max_depth = cfg.max_depth;
    g.min_samples_split = cfg.min_samples_split;

    std::vector<double> f(n, m.init), residual(n), hessian(n);
    if (loss_trace) loss_trace->assign(1, mean_log_loss(f, y));
    for (int r = 0; r < cfg.n_rounds; ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(f[i]);
            residual[i] = y[i] - p;
            hessian[i] = p * (1.0 - p);
        }
        Tree t = fit_round(X, y, f, residual, hessian, cfg.shrinkage, g);
        for (std::size_t i = 0; i < n; ++i) f[i] += cfg.shrinkage * t.eval(X.col(static_cast<Index>(i)).data());
        m.trees.push_back(std::move(t));
        if (loss_trace) loss_trace->push_back(mean_log_loss(f, y));
    }
    return m;
}

inline double predict(const BoostModel& m, const VectorXd& x) {
    detail::check_input(m.feature_dim, x.size());
    double s = 0;
    for (const auto& t : m.trees) s += t.eval(x.data());
    return sigmoid(m.init + m.shrinkage * s);
}

template <class Model>
std::vector<double> predict_all(const Model& m, const MatrixXd& X) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(X.cols()));
    for (Index j = 0; j < X.cols(); ++j) out.push_back(predict(m, X.col(j)));
    return out;
}

}  // namespace iotgan::trees
