#pragma once

// End-to-end wiring: dataset split, detector training for each model kind,
// and the seeded S1 reproduction run behind `iotgan repro`.

#include <chrono>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "iotgan/bigan.hpp"
#include "iotgan/checkpoint.hpp"
#include "iotgan/eval.hpp"
#include "iotgan/scenario.hpp"
#include "iotgan/trees.hpp"

namespace iotgan::pipeline {

using checkpoint::Detector;
using checkpoint::ModelKind;
using features::FeatureVector;
using features::Label;

class DataError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline std::vector<int> binary_labels(std::span<const FeatureVector> v) {
    std::vector<int> y;
    y.reserve(v.size());
    for (const auto& s : v) {
        if (s.label == Label::unlabeled) throw DataError("vector for " + s.device_ip.to_string() + " is unlabeled");
        y.push_back(s.label == Label::malicious ? 1 : 0);
    }
    return y;
}

inline std::vector<FeatureVector> with_label(std::span<const FeatureVector> v, Label l) {
    std::vector<FeatureVector> out;
    for (const auto& s : v)
        if (s.label == l) out.push_back(s);
    return out;
}

struct Split {
    std::vector<FeatureVector> train;
    std::vector<FeatureVector> test;
};

/// Per-label seeded shuffle; round(test_fraction * n) of each label go to
/// test. Both halves keep the input's relative order.
inline Split stratified_split(std::span<const FeatureVector> v, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0 && test_fraction < 1)) throw std::invalid_argument("test_fraction must lie in (0, 1)");
    std::mt19937_64 rng(seed);
    std::vector<char> is_test(v.size(), 0);
    for (Label l : {Label::benign, Label::malicious, Label::unlabeled}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < v.size(); ++i)
            if (v[i].label == l) idx.push_back(i);
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
        for (std::size_t k = 0; k < n_test; ++k) is_test[idx[k]] = 1;
    }
    Split s;
    for (std::size_t i = 0; i < v.size(); ++i) (is_test[i] ? s.test : s.train).push_back(v[i]);
    return s;
}

struct TrainOptions {
    bigan::TrainConfig gan;
    double threshold_percentile = 95.0;
    trees::ForestConfig forest;
    trees::BoostConfig boost;
    double tree_threshold = 0.5;
    std::uint64_t seed = 0;  // overrides the seeds in the per-kind configs
};

struct Trained {
    Detector detector;
    bigan::TrainingTrace trace;  // GAN kinds only
    std::size_t samples = 0;
};

/// GAN kinds train on one class only: benign rows for gan-benign, malicious
/// rows for gan-darknet. The threshold is the chosen percentile of the
/// model's scores on its own training rows.
inline Trained train_detector(ModelKind kind, std::span<const FeatureVector> data, const TrainOptions& opt) {
    Trained out;
    out.detector.kind = kind;
    if (checkpoint::is_gan(kind)) {
        const bool darknet = kind == ModelKind::gan_darknet;
        const auto rows = with_label(data, darknet ? Label::malicious : Label::benign);
        if (rows.empty())
            throw DataError(std::string("no ") + (darknet ? "malicious" : "benign") + " rows to train " +
                            checkpoint::to_string(kind) + " on");
        auto [x, stats] = features::normalize(features::to_matrix(rows));
        auto cfg = opt.gan;
        cfg.seed = opt.seed;
        auto [model, trace] = bigan::train(x, cfg);
        model.norm = std::move(stats);
        model.orientation = darknet ? bigan::Orientation::darknet : bigan::Orientation::benign;
        const auto s = bigan::scores(model, x);
        model.threshold = bigan::choose_threshold(s, opt.threshold_percentile);
        out.detector.model = std::move(model);
        out.trace = std::move(trace);
        out.samples = rows.size();
        return out;
    }
    const auto x = features::to_matrix(data);
    const auto y = binary_labels(data);
    if (kind == ModelKind::forest) {
        auto cfg = opt.forest;
        cfg.seed = opt.seed;
        out.detector.model = trees::train_forest(x, y, cfg);
    } else {
        auto cfg = opt.boost;
        cfg.seed = opt.seed;
        out.detector.model = trees::train_boost(x, y, cfg);
    }
    out.detector.tree_threshold = opt.tree_threshold;
    out.detector.tree_seed = opt.seed;
    out.samples = data.size();
    return out;
}

/// Per-sample latency of the complete scoring path from a raw vector
/// (including normalization for GAN kinds).
inline eval::Timing time_detector(const Detector& d, const Eigen::MatrixXd& raw, int repeats) {
    std::vector<Eigen::VectorXd> cols;
    for (Eigen::Index j = 0; j < raw.cols(); ++j) cols.push_back(raw.col(j));
    volatile double sink = 0;
    std::function<void(std::size_t)> one;
    if (checkpoint::is_gan(d.kind)) {
        const auto& m = d.gan();
        one = [&](std::size_t j) {
            const Eigen::VectorXd x = features::normalize(cols[j], m.norm).first;
            sink = sink + bigan::anomaly_score(m, x, m.alpha).score;
        };
    } else if (d.kind == ModelKind::forest) {
        const auto& m = std::get<trees::ForestModel>(d.model);
        one = [&](std::size_t j) { sink = sink + trees::predict(m, cols[j]); };
    } else {
        const auto& m = std::get<trees::BoostModel>(d.model);
        one = [&](std::size_t j) { sink = sink + trees::predict(m, cols[j]); };
    }
    return eval::time_inference(cols.size(), repeats, one);
}

// ---------------------------------------------------------------------------
// Scored CSV: one row per input vector, self-describing enough for `eval`.

struct ScoredRow {
    Ipv4 device_ip;
    Label label = Label::unlabeled;
    double score = 0;
    bool anomalous = false;
};

struct ScoredSet {
    std::string model_kind;
    std::uint64_t seed = 0;
    double threshold = 0;
    eval::Polarity polarity = eval::Polarity::high;
    std::vector<ScoredRow> rows;
};

inline const char* scored_header = "device_ip,label,model_kind,seed,threshold,polarity,score,anomalous";

inline ScoredSet score_vectors(const Detector& d, std::span<const FeatureVector> v) {
    ScoredSet s;
    s.model_kind = checkpoint::to_string(d.kind);
    s.seed = d.seed();
    s.threshold = d.threshold();
    s.polarity = d.polarity();
    const auto sc = d.score(features::to_matrix(v));
    for (std::size_t i = 0; i < v.size(); ++i)
        s.rows.push_back({v[i].device_ip, v[i].label, sc[i], eval::flagged(sc[i], s.threshold, s.polarity)});
    return s;
}

inline std::string write_scored_csv(const ScoredSet& s) {
    std::string out = std::string(scored_header) + "\n";
    const std::string common = "," + s.model_kind + "," + std::to_string(s.seed) + "," +
                               features::format_double(s.threshold) + "," + eval::to_string(s.polarity) + ",";
    for (const auto& r : s.rows)
        out += r.device_ip.to_string() + "," + features::to_string(r.label) + common +
               features::format_double(r.score) + "," + (r.anomalous ? "1" : "0") + "\n";
    return out;
}

inline ScoredSet read_scored_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError("scored CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != scored_header) throw DataError("scored CSV header mismatch");
    ScoredSet s;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto c = features::split_csv_line(line);
        if (c.size() != 8) throw DataError("scored CSV line " + std::to_string(lineno) + ": expected 8 cells");
        const double threshold = features::parse_double(c[4]);
        const auto polarity = c[5] == "low" ? eval::Polarity::low : eval::Polarity::high;
        if (c[5] != "low" && c[5] != "high") throw DataError("scored CSV line " + std::to_string(lineno) + ": bad polarity");
        if (s.rows.empty()) {
            s.model_kind = c[2];
            s.seed = std::stoull(c[3]);
            s.threshold = threshold;
            s.polarity = polarity;
        } else if (c[2] != s.model_kind || threshold != s.threshold || polarity != s.polarity) {
            throw DataError("scored CSV line " + std::to_string(lineno) + " comes from a different model");
        }
        s.rows.push_back({Ipv4::parse(c[0]), features::parse_label(c[1]), features::parse_double(c[6]), c[7] == "1"});
    }
    return s;
}

// ---------------------------------------------------------------------------
// S1 reproduction.

struct ReproOptions {
    std::uint64_t seed = 0;
    TrainOptions train;
    int sweep_points = 21;
    int timing_repeats = 5;
};

struct ModelRun {
    Trained trained;
    eval::Report report;
    eval::Timing timing;
    double train_seconds = 0;
};

struct ReproResult {
    std::string dataset_id;
    std::uint64_t seed = 0;
    ReproOptions options;
    std::size_t train_benign = 0, train_malicious = 0, test_benign = 0, test_malicious = 0, darknet_vectors = 0;
    double generate_seconds = 0;
    std::vector<ModelRun> models;  // gan-benign, gan-darknet, forest, boost

    const ModelRun& get(ModelKind k) const {
        for (const auto& m : models)
            if (m.trained.detector.kind == k) return m;
        throw std::out_of_range(std::string("no run for ") + checkpoint::to_string(k));
    }

    /// Deterministic for a given seed: no wall-clock values.
    nlohmann::ordered_json report() const {
        const auto& g = options.train.gan;
        nlohmann::ordered_json models_j = nlohmann::ordered_json::array();
        for (const auto& m : models) models_j.push_back(eval::to_json(m.report));
        return {{"dataset_id", dataset_id},
                {"seed", seed},
                {"split",
                 {{"train_benign", train_benign},
                  {"train_malicious", train_malicious},
                  {"test_benign", test_benign},
                  {"test_malicious", test_malicious},
                  {"darknet_vectors", darknet_vectors}}},
                {"gan_config",
                 {{"epochs", g.epochs},
                  {"batch_size", g.batch_size},
                  {"optimizer", nn::to_string(g.optimizer.kind)},
                  {"learning_rate", g.optimizer.learning_rate},
                  {"alpha", g.alpha},
                  {"threshold_percentile", options.train.threshold_percentile}}},
                {"models", std::move(models_j)}};
    }

    nlohmann::ordered_json timings() const {
        nlohmann::ordered_json j;
        j["generate_seconds"] = generate_seconds;
        for (const auto& m : models) {
            auto t = eval::to_json(m.timing);
            t["train_seconds"] = m.train_seconds;
            j[checkpoint::to_string(m.trained.detector.kind)] = std::move(t);
        }
        return j;
    }

    std::string table() const {
        std::ostringstream out;
        char line[256];
        std::snprintf(line, sizeof line, "%-12s %12s %9s %9s %6s %6s %6s %6s %10s %10s\n", "model", "threshold",
                      "precision", "recall", "tp", "fp", "tn", "fn", "mean_ms", "p95_ms");
        out << line;
        for (const auto& m : models) {
            const auto& r = m.report;
            const auto& k = r.metrics;
            std::snprintf(line, sizeof line, "%-12s %12.6g %9.4f %9.4f %6lld %6lld %6lld %6lld %10.5f %10.5f\n",
                          r.model_kind.c_str(), r.threshold, k.precision, k.recall, static_cast<long long>(k.tp),
                          static_cast<long long>(k.fp), static_cast<long long>(k.tn), static_cast<long long>(k.fn),
                          m.timing.mean_ms, m.timing.p95_ms);
            out << line;
        }
        return out.str();
    }
};

namespace stream {
inline constexpr std::uint64_t split = 100, gan_benign = 101, gan_darknet = 102, forest = 103, boost = 104;
}

inline ReproResult run_repro(const sim::Scenario& scenario, const ReproOptions& opt) {
    using clock = std::chrono::steady_clock;
    auto seconds = [](clock::time_point a) { return std::chrono::duration<double>(clock::now() - a).count(); };
    if (!scenario.darknet) throw sim::ConfigError("scenario has no darknet section; repro needs one");

    const sim::Scenario sc = sim::with_seed(scenario, opt.seed);
    ReproResult res;
    res.dataset_id = sc.dataset.name;
    res.seed = opt.seed;
    res.options = opt;

    auto t0 = clock::now();
    const auto data = sim::generate_dataset(sc.dataset);
    const auto dark = sim::generate_dataset(*sc.darknet);
    res.generate_seconds = seconds(t0);

    const Split split = stratified_split(data.vectors, sc.test_fraction, mix_seed(opt.seed, stream::split));
    for (const auto& v : split.train) (v.label == Label::malicious ? res.train_malicious : res.train_benign)++;
    for (const auto& v : split.test) (v.label == Label::malicious ? res.test_malicious : res.test_benign)++;
    res.darknet_vectors = dark.vectors.size();

    const auto test_x = features::to_matrix(split.test);
    const auto test_y = binary_labels(split.test);

    auto run = [&](ModelKind kind, std::span<const FeatureVector> train_set, std::uint64_t s) {
        TrainOptions to = opt.train;
        to.seed = mix_seed(opt.seed, s);
        ModelRun m;
        auto t = clock::now();
        m.trained = train_detector(kind, train_set, to);
        m.train_seconds = seconds(t);
        const auto& d = m.trained.detector;
        const auto sc_test = d.score(test_x);
        m.report = eval::make_report(checkpoint::to_string(kind), res.dataset_id, opt.seed, sc_test, test_y,
                                     d.threshold(), d.polarity(), opt.sweep_points);
        m.timing = time_detector(d, test_x, opt.timing_repeats);
        res.models.push_back(std::move(m));
    };
    run(ModelKind::gan_benign, split.train, stream::gan_benign);
    run(ModelKind::gan_darknet, dark.vectors, stream::gan_darknet);
    run(ModelKind::forest, split.train, stream::forest);
    run(ModelKind::boost, split.train, stream::boost);
    return res;
}

}  // namespace iotgan::pipeline
