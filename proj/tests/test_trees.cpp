#include <gtest/gtest.h>

#include <random>

#include "iotgan/trees.hpp"

using namespace iotgan::trees;

namespace {

struct Data {
    MatrixXd X;
    std::vector<int> y;
};

// Feature 0 decides the class at 5; the other features are noise.
Data separable(Index n, Index d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, 10);
    Data out{MatrixXd(d, n), {}};
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < d; ++i) out.X(i, j) = u(rng);
        if (std::abs(out.X(0, j) - 5) < 0.05) out.X(0, j) += 0.2;
        out.y.push_back(out.X(0, j) > 5 ? 1 : 0);
    }
    return out;
}

Data noisy(Index n, Index d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Data out{MatrixXd(d, n), {}};
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < d; ++i) out.X(i, j) = g(rng);
        out.y.push_back(out.X(0, j) + out.X(1, j) + g(rng) > 0 ? 1 : 0);
    }
    return out;
}

double accuracy(const std::vector<double>& p, const std::vector<int>& y) {
    int ok = 0;
    for (std::size_t i = 0; i < y.size(); ++i) ok += (p[i] > 0.5) == (y[i] == 1);
    return static_cast<double>(ok) / static_cast<double>(y.size());
}

// Recursive walk written against the node layout alone.
double walk(const Tree& t, const VectorXd& x, int i = 0) {
    const Node& n = t.nodes.at(static_cast<std::size_t>(i));
    if (n.feature == -1) return n.value;
    return walk(t, x, x(n.feature) <= n.threshold ? n.left : n.right);
}

}  // namespace

TEST(Forest, SeparableOnFeatureZero) {
    const auto d = separable(300, 8, 1);
    ForestConfig cfg;
    cfg.seed = 3;
    const auto m = train_forest(d.X, d.y, cfg);
    EXPECT_EQ(m.trees.size(), 100u);
    EXPECT_EQ(accuracy(predict_all(m, d.X), d.y), 1.0);
}

TEST(Forest, OneSamplePerClassMemorized) {
    MatrixXd X(3, 2);
    X << 0, 1, 4, 2, 7, 7;
    const std::vector<int> y = {0, 1};
    const auto m = train_forest(X, y);
    EXPECT_EQ(accuracy(predict_all(m, X), y), 1.0);
}

TEST(Forest, SameSeedSameModel) {
    const auto d = noisy(200, 10, 2);
    ForestConfig cfg;
    cfg.n_trees = 20;
    cfg.seed = 11;
    const auto a = train_forest(d.X, d.y, cfg);
    const auto b = train_forest(d.X, d.y, cfg);
    EXPECT_TRUE(a == b);
    const auto probe = noisy(50, 10, 3);
    EXPECT_EQ(predict_all(a, probe.X), predict_all(b, probe.X));
    cfg.seed = 12;
    EXPECT_FALSE(a == train_forest(d.X, d.y, cfg));
}

TEST(Forest, RespectsDepthAndLeafRange) {
    const auto d = noisy(300, 6, 4);
    ForestConfig cfg;
    cfg.n_trees = 10;
    cfg.max_depth = 3;
    const auto m = train_forest(d.X, d.y, cfg);
    for (const auto& t : m.trees) {
        EXPECT_LE(t.depth(), 3);
        for (const auto& n : t.nodes)
            if (n.is_leaf()) {
                EXPECT_GE(n.value, 0.0);
                EXPECT_LE(n.value, 1.0);
            }
    }
}

TEST(Forest, IdenticalSingleLeafTrees) {
    ForestModel m;
    m.feature_dim = 2;
    Tree leaf;
    leaf.nodes.push_back(Node{-1, 0, -1, -1, 1.0});
    m.trees.assign(5, leaf);
    EXPECT_EQ(predict(m, VectorXd::Zero(2)), 1.0);
}

TEST(Forest, RejectsBadInput) {
    EXPECT_THROW(train_forest(MatrixXd(3, 0), std::vector<int>{}), EmptyDataset);
    EXPECT_THROW(train_forest(MatrixXd::Zero(3, 2), std::vector<int>{1, 1}), SingleClassData);
    EXPECT_THROW(train_forest(MatrixXd::Zero(3, 2), std::vector<int>{1}), std::invalid_argument);
    ForestConfig cfg;
    cfg.n_trees = 0;
    EXPECT_THROW(train_forest(MatrixXd::Zero(3, 2), std::vector<int>{0, 1}, cfg), std::invalid_argument);
    const auto m = train_forest(MatrixXd::Identity(3, 2), std::vector<int>{0, 1});
    EXPECT_THROW(predict(m, VectorXd::Zero(4)), DimensionMismatch);
}

TEST(Boost, ZeroRoundsRejected) {
    BoostConfig cfg;
    cfg.n_rounds = 0;
    EXPECT_THROW(train_boost(MatrixXd::Identity(2, 2), std::vector<int>{0, 1}, cfg), std::invalid_argument);
}

TEST(Boost, ZeroResidualGivesSingleLeaf) {
    const auto d = noisy(40, 3, 5);
    const std::vector<double> f(40, 0.3), zero(40, 0.0), hess(40, 0.25);
    detail::GrowConfig g;
    g.max_depth = 3;
    const Tree t = fit_round(d.X, d.y, f, zero, hess, 0.1, g);
    ASSERT_EQ(t.nodes.size(), 1u);
    EXPECT_EQ(t.nodes[0].value, 0.0);

    BoostModel m;
    m.feature_dim = 3;
    m.init = std::log(0.2 / 0.8);
    m.trees.assign(10, t);
    EXPECT_NEAR(predict(m, d.X.col(0)), 0.2, 1e-15);
}

TEST(Boost, InitZeroNoTreesIsHalf) {
    BoostModel m;
    m.feature_dim = 4;
    EXPECT_EQ(predict(m, VectorXd::Zero(4)), 0.5);
}

TEST(Boost, SeparableFiftyRounds) {
    const auto d = separable(300, 8, 6);
    BoostConfig cfg;
    cfg.n_rounds = 50;
    const auto m = train_boost(d.X, d.y, cfg);
    EXPECT_EQ(m.trees.size(), 50u);
    EXPECT_EQ(accuracy(predict_all(m, d.X), d.y), 1.0);
}

TEST(Boost, TrainingLossNeverIncreases) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto d = noisy(250, 5, 10 + seed);
        std::vector<double> trace;
        BoostConfig cfg;
        cfg.n_rounds = 60;
        const auto m = train_boost(d.X, d.y, cfg, &trace);
        ASSERT_EQ(trace.size(), 61u);
        for (std::size_t r = 1; r < trace.size(); ++r) EXPECT_LE(trace[r], trace[r - 1] + 1e-12) << r;
        EXPECT_LT(trace.back(), trace.front());
        for (const auto& t : m.trees) EXPECT_LE(t.depth(), 3);
    }
}

TEST(Boost, Deterministic) {
    const auto d = noisy(150, 6, 7);
    EXPECT_TRUE(train_boost(d.X, d.y) == train_boost(d.X, d.y));
}

TEST(Predict, MatchesTraversalOracle) {
    const auto d = noisy(200, 7, 8);
    ForestConfig fc;
    fc.n_trees = 15;
    fc.seed = 9;
    const auto forest = train_forest(d.X, d.y, fc);
    BoostConfig bc;
    bc.n_rounds = 25;
    const auto boost = train_boost(d.X, d.y, bc);
    const auto probe = noisy(100, 7, 99);
    for (Index j = 0; j < probe.X.cols(); ++j) {
        const VectorXd x = probe.X.col(j);
        double fs = 0;
        for (const auto& t : forest.trees) fs += walk(t, x);
        EXPECT_NEAR(predict(forest, x), fs / 15.0, 1e-15);
        double bs = 0;
        for (const auto& t : boost.trees) bs += walk(t, x);
        EXPECT_NEAR(predict(boost, x), 1.0 / (1.0 + std::exp(-(boost.init + 0.1 * bs))), 1e-14);
        const double p = predict(forest, x);
        EXPECT_TRUE(p >= 0.0 && p <= 1.0);
    }
}

TEST(Split, PicksCleanThresholdAndBreaksTies) {
    MatrixXd X(2, 4);
    X << 1, 2, 3, 4,
         1, 2, 3, 4;
    const std::vector<double> t = {0, 0, 1, 1};
    const std::vector<Index> idx = {0, 1, 2, 3};
    const std::vector<int> feats = {0, 1};
    const auto s = detail::best_split(X, t, idx, feats, 1);
    EXPECT_EQ(s.feature, 0);
    EXPECT_EQ(s.threshold, 2.5);
    EXPECT_NEAR(s.gain, 1.0, 1e-12);
}
