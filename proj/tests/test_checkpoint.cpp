#include <gtest/gtest.h>

#include <random>

#include "iotgan/checkpoint.hpp"
#include "iotgan/pipeline.hpp"

using namespace iotgan;
using namespace iotgan::checkpoint;
using features::FeatureVector;
using features::Label;

namespace {

std::vector<FeatureVector> labelled(std::size_t benign, std::size_t malicious, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<FeatureVector> out;
    for (std::size_t i = 0; i < benign + malicious; ++i) {
        FeatureVector v;
        v.device_ip = Ipv4(10, 0, 0, static_cast<std::uint8_t>(1 + i % 3));
        v.ts_micros = static_cast<std::int64_t>(i);
        v.label = i < benign ? Label::benign : Label::malicious;
        for (auto& x : v.values) x = g(rng) + (i < benign ? 0.0 : 3.0);
        out.push_back(v);
    }
    return out;
}

pipeline::TrainOptions quick() {
    pipeline::TrainOptions o;
    o.gan.epochs = 2;
    o.forest.n_trees = 5;
    o.boost.n_rounds = 5;
    o.seed = 13;
    return o;
}

}  // namespace

TEST(Checkpoint, ExactRoundTripForEveryKind) {
    const auto data = labelled(60, 40, 1);
    const auto x = features::to_matrix(data);
    for (auto kind : {ModelKind::gan_benign, ModelKind::gan_darknet, ModelKind::forest, ModelKind::boost}) {
        const auto d = pipeline::train_detector(kind, data, quick()).detector;
        const std::string text = dump(d);
        const Detector back = parse(text);
        EXPECT_EQ(back.kind, kind);
        EXPECT_EQ(back.threshold(), d.threshold());
        EXPECT_EQ(back.seed(), d.seed());
        EXPECT_EQ(back.polarity(), d.polarity());
        EXPECT_EQ(back.score(x), d.score(x)) << to_string(kind);
        EXPECT_EQ(dump(back), text);
    }
}

TEST(Checkpoint, RejectsMalformedInput) {
    const auto d = pipeline::train_detector(ModelKind::forest, labelled(20, 20, 2), quick()).detector;
    const auto good = nlohmann::json::parse(dump(d));
    auto broken = [&](auto edit) {
        auto j = good;
        edit(j);
        return j.dump();
    };
    EXPECT_THROW(parse("not json"), CheckpointError);
    EXPECT_THROW(parse(broken([](auto& j) { j["format"] = "other"; })), CheckpointError);
    EXPECT_THROW(parse(broken([](auto& j) { j["version"] = 99; })), CheckpointError);
    EXPECT_THROW(parse(broken([](auto& j) { j["feature_order"] = "v0"; })), CheckpointError);
    EXPECT_THROW(parse(broken([](auto& j) { j["feature_dim"] = 51; })), CheckpointError);
    EXPECT_THROW(parse(broken([](auto& j) { j["model_kind"] = "svm"; })), CheckpointError);
    EXPECT_THROW(parse(broken([](auto& j) { j.erase("trees"); })), CheckpointError);
    EXPECT_THROW(load("/nonexistent/model.json"), CheckpointError);
}

TEST(Checkpoint, RejectsMismatchedGanShapes) {
    const auto d = pipeline::train_detector(ModelKind::gan_benign, labelled(30, 5, 3), quick()).detector;
    auto j = nlohmann::json::parse(dump(d));
    EXPECT_NO_THROW(parse(j.dump()));
    j["norm"]["mean"].erase(0);
    EXPECT_THROW(parse(j.dump()), CheckpointError);
}

TEST(Pipeline, StratifiedSplitKeepsProportions) {
    const auto data = labelled(500, 30, 4);
    const auto s = pipeline::stratified_split(data, 0.2, 9);
    EXPECT_EQ(s.train.size() + s.test.size(), data.size());
    std::size_t test_mal = 0;
    for (const auto& v : s.test) test_mal += v.label == Label::malicious;
    EXPECT_EQ(test_mal, 6u);
    EXPECT_EQ(s.test.size(), 106u);
    for (std::size_t i = 1; i < s.train.size(); ++i) EXPECT_LT(s.train[i - 1].ts_micros, s.train[i].ts_micros);
    EXPECT_EQ(pipeline::stratified_split(data, 0.2, 9).test.front().ts_micros, s.test.front().ts_micros);
    EXPECT_THROW(pipeline::stratified_split(data, 1.0, 9), std::invalid_argument);
}

TEST(Pipeline, GanNeedsRowsOfItsClass) {
    EXPECT_THROW(pipeline::train_detector(ModelKind::gan_darknet, labelled(10, 0, 5), quick()), pipeline::DataError);
    auto unl = labelled(10, 2, 5);
    unl[0].label = Label::unlabeled;
    EXPECT_THROW(pipeline::train_detector(ModelKind::forest, unl, quick()), pipeline::DataError);
}

TEST(Pipeline, ScoredCsvRoundTrip) {
    const auto data = labelled(40, 10, 6);
    const auto d = pipeline::train_detector(ModelKind::boost, data, quick()).detector;
    const auto s = pipeline::score_vectors(d, data);
    const std::string csv = pipeline::write_scored_csv(s);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), pipeline::scored_header);
    const auto back = pipeline::read_scored_csv(csv);
    EXPECT_EQ(back.model_kind, "boost");
    EXPECT_EQ(back.seed, 13u);
    EXPECT_EQ(back.threshold, 0.5);
    ASSERT_EQ(back.rows.size(), data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        EXPECT_EQ(back.rows[i].score, s.rows[i].score);
        EXPECT_EQ(back.rows[i].label, data[i].label);
        EXPECT_EQ(back.rows[i].anomalous, s.rows[i].anomalous);
    }
    EXPECT_EQ(pipeline::write_scored_csv(back), csv);
    EXPECT_THROW(pipeline::read_scored_csv(""), pipeline::DataError);
    EXPECT_THROW(pipeline::read_scored_csv("a,b\n"), pipeline::DataError);
    EXPECT_THROW(pipeline::read_scored_csv(std::string(pipeline::scored_header) + "\n1,2,3\n"), pipeline::DataError);
}
