#pragma once

// Detection metrics, threshold sweeps, per-sample latency measurement and
// the JSON/CSV report layout.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "iotgan/feature_csv.hpp"

namespace iotgan::eval {

/// Which side of the threshold counts as a detection.
enum class Polarity { high, low };  // high: score > t, low: score <= t

inline const char* to_string(Polarity p) { return p == Polarity::high ? "high" : "low"; }

inline bool flagged(double score, double threshold, Polarity p) {
    return p == Polarity::high ? score > threshold : score <= threshold;
}

class LengthMismatch : public std::invalid_argument {
public:
    LengthMismatch(std::size_t scores, std::size_t labels)
        : std::invalid_argument("got " + std::to_string(scores) + " scores but " + std::to_string(labels) +
                                " labels") {}
};

class EmptyScores : public std::invalid_argument {
public:
    EmptyScores() : std::invalid_argument("no scores to evaluate") {}
};

struct Metrics {
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    double precision = 1.0;
    double recall = 1.0;
    double mean_inference_ms = 0;
    double p95_inference_ms = 0;

    std::int64_t total() const { return tp + fp + tn + fn; }
};

/// Positive class = label 1 = attack. Precision is 1.0 when nothing is
/// flagged; recall is 1.0 when there are no positives.
inline Metrics precision_recall(std::span<const double> scores, std::span<const int> labels, double threshold,
                                Polarity polarity = Polarity::high) {
    if (scores.size() != labels.size()) throw LengthMismatch(scores.size(), labels.size());
    Metrics m;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("labels must be 0 or 1");
        const bool hit = flagged(scores[i], threshold, polarity);
        if (labels[i]) (hit ? m.tp : m.fn)++;
        else (hit ? m.fp : m.tn)++;
    }
    if (m.tp + m.fp > 0) m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
    if (m.tp + m.fn > 0) m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
    return m;
}

struct SweepPoint {
    double threshold = 0;
    Metrics metrics;
};

/// n_points thresholds evenly spaced over [min score, max score].
inline std::vector<SweepPoint> sweep_thresholds(std::span<const double> scores, std::span<const int> labels,
                                                int n_points, Polarity polarity = Polarity::high) {
    if (n_points < 2) throw std::invalid_argument("n_points must be >= 2");
    if (scores.empty()) throw EmptyScores();
    if (scores.size() != labels.size()) throw LengthMismatch(scores.size(), labels.size());
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    std::vector<SweepPoint> out;
    for (int i = 0; i < n_points; ++i) {
        const double t = i == n_points - 1 ? *hi : *lo + (*hi - *lo) * i / (n_points - 1);
        out.push_back({t, precision_recall(scores, labels, t, polarity)});
    }
    return out;
}

struct Timing {
    double mean_ms = 0;
    double p95_ms = 0;
    double spread_ms = 0;  // standard deviation of the per-repeat means
    int repeats = 0;
    std::size_t samples = 0;
};

/// Single-threaded per-sample latency: `score_one(j)` scores sample j. One
/// untimed warmup pass, then `repeats` timed passes; mean and p95 are over
/// every individual call.
inline Timing time_inference(std::size_t n_samples, int repeats, const std::function<void(std::size_t)>& score_one) {
    if (n_samples == 0) throw EmptyScores();
    if (repeats < 3) throw std::invalid_argument("repeats must be >= 3");
    using clock = std::chrono::steady_clock;
    for (std::size_t j = 0; j < n_samples; ++j) score_one(j);

    std::vector<double> calls;
    calls.reserve(n_samples * static_cast<std::size_t>(repeats));
    std::vector<double> means;
    for (int r = 0; r < repeats; ++r) {
        double sum = 0;
        for (std::size_t j = 0; j < n_samples; ++j) {
            const auto t0 = clock::now();
            score_one(j);
            const double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
            calls.push_back(ms);
            sum += ms;
        }
        means.push_back(sum / static_cast<double>(n_samples));
    }
    Timing t;
    t.repeats = repeats;
    t.samples = n_samples;
    for (double c : calls) t.mean_ms += c;
    t.mean_ms /= static_cast<double>(calls.size());
    std::sort(calls.begin(), calls.end());
    const double rank = 0.95 * static_cast<double>(calls.size() - 1);
    const auto lo = static_cast<std::size_t>(rank);
    const std::size_t hi = std::min(lo + 1, calls.size() - 1);
    t.p95_ms = calls[lo] + (rank - static_cast<double>(lo)) * (calls[hi] - calls[lo]);
    double grand = 0;
    for (double m : means) grand += m;
    grand /= static_cast<double>(means.size());
    double var = 0;
    for (double m : means) var += (m - grand) * (m - grand);
    t.spread_ms = std::sqrt(var / static_cast<double>(means.size()));
    return t;
}

// ---------------------------------------------------------------------------
// Reports.

inline nlohmann::ordered_json to_json(const Metrics& m) {
    return {{"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}, {"precision", m.precision}, {"recall", m.recall}};
}

inline nlohmann::ordered_json to_json(const Timing& t) {
    return {{"mean_ms", t.mean_ms}, {"p95_ms", t.p95_ms}, {"spread_ms", t.spread_ms}, {"repeats", t.repeats},
            {"samples", t.samples}};
}

struct Report {
    std::string model_kind;
    std::string dataset_id;
    std::uint64_t seed = 0;
    double threshold = 0;
    Polarity polarity = Polarity::high;
    Metrics metrics;
    std::vector<SweepPoint> sweep;
};

/// Timing is deliberately absent so reports stay byte-reproducible.
inline nlohmann::ordered_json to_json(const Report& r) {
    nlohmann::ordered_json sweep = nlohmann::ordered_json::array();
    for (const auto& p : r.sweep) {
        nlohmann::ordered_json e = {{"threshold", p.threshold}};
        e.update(to_json(p.metrics));
        sweep.push_back(std::move(e));
    }
    return {{"model_kind", r.model_kind}, {"dataset_id", r.dataset_id}, {"seed", r.seed},
            {"threshold", r.threshold},   {"polarity", to_string(r.polarity)}, {"metrics", to_json(r.metrics)},
            {"sweep", std::move(sweep)}};
}

inline Report make_report(std::string model_kind, std::string dataset_id, std::uint64_t seed,
                          std::span<const double> scores, std::span<const int> labels, double threshold,
                          Polarity polarity, int sweep_points = 21) {
    Report r;
    r.model_kind = std::move(model_kind);
    r.dataset_id = std::move(dataset_id);
    r.seed = seed;
    r.threshold = threshold;
    r.polarity = polarity;
    r.metrics = precision_recall(scores, labels, threshold, polarity);
    r.sweep = sweep_thresholds(scores, labels, sweep_points, polarity);
    return r;
}

inline void write_sweep_csv(std::ostream& out, const Report& r) {
    out << "threshold,tp,fp,tn,fn,precision,recall\n";
    for (const auto& p : r.sweep) {
        const auto& m = p.metrics;
        out << features::format_double(p.threshold) << ',' << m.tp << ',' << m.fp << ',' << m.tn << ',' << m.fn
            << ',' << features::format_double(m.precision) << ',' << features::format_double(m.recall) << '\n';
    }
}

}  // namespace iotgan::eval
