#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "iotgan/packet.hpp"

namespace iotgan::features {

inline constexpr std::size_t features_per_window = 13;
inline constexpr std::array<std::size_t, 4> window_sizes = {50, 100, 500, 2000};
inline constexpr std::size_t vector_dim = features_per_window * window_sizes.size();
inline constexpr std::size_t history_capacity = 2000;

/// Position of each statistic inside a 13-feature window block.
enum Feature : std::size_t {
    pkt_count_mean,
    pkt_count_std,
    len_mean,
    len_std,
    iat_mean,
    iat_std,
    uniq_local_ports,
    uniq_remote_ports,
    tcp_ratio,
    psh_count,
    urg_count,
    idle_secs,
    active_secs,
};

enum class Direction : std::uint8_t { outbound, inbound };
enum class Label : std::uint8_t { benign, malicious, unlabeled };

inline const char* to_string(Label l) {
    switch (l) {
    case Label::benign: return "benign";
    case Label::malicious: return "malicious";
    case Label::unlabeled: return "unlabeled";
    }
    return "unlabeled";
}

inline Label parse_label(const std::string& s) {
    if (s == "benign") return Label::benign;
    if (s == "malicious") return Label::malicious;
    if (s == "unlabeled" || s.empty()) return Label::unlabeled;
    throw std::invalid_argument("unknown label: " + s);
}

/// A packet as seen from one device: ports are split into local/remote.
struct DirectionalPacket {
    std::int64_t ts_micros = 0;
    Direction direction = Direction::outbound;
    std::uint32_t length = 0;
    Protocol protocol = Protocol::other;
    std::uint8_t tcp_flags = 0;
    std::uint16_t local_port = 0;
    std::uint16_t remote_port = 0;

    friend bool operator==(const DirectionalPacket&, const DirectionalPacket&) = default;
};

inline DirectionalPacket as_seen_by(Ipv4 device, const PacketRecord& p) {
    const bool out = p.src_ip == device;
    return DirectionalPacket{
        .ts_micros = p.ts_micros,
        .direction = out ? Direction::outbound : Direction::inbound,
        .length = p.frame_len,
        .protocol = p.protocol,
        .tcp_flags = p.tcp_flags,
        .local_port = out ? p.src_port : p.dst_port,
        .remote_port = out ? p.dst_port : p.src_port,
    };
}

struct WindowConfig {
    /// Gaps strictly longer than this count as idle time.
    double idle_threshold_s = 1.0;
};

using WindowStats = std::array<double, features_per_window>;
using Values = std::array<double, vector_dim>;

/// Bidirectional packet history of one device, bounded to the most recent
/// history_capacity entries and kept sorted by timestamp.
class DeviceStream {
public:
    DeviceStream() = default;
    explicit DeviceStream(Ipv4 device) : device_(device) {}

    Ipv4 device_ip() const { return device_; }
    std::uint64_t total_seen() const { return total_seen_; }

    std::span<const DirectionalPacket> history() const {
        const std::size_t n = std::min(buffer_.size(), history_capacity);
        return std::span<const DirectionalPacket>(buffer_).last(n);
    }

    /// Appends in timestamp order; equal timestamps keep arrival order.
    void push(const DirectionalPacket& pkt) {
        ++total_seen_;
        if (buffer_.empty() || buffer_.back().ts_micros <= pkt.ts_micros) {
            buffer_.push_back(pkt);
        } else {
            auto pos = std::upper_bound(buffer_.begin(), buffer_.end(), pkt.ts_micros,
                                        [](std::int64_t ts, const DirectionalPacket& e) { return ts < e.ts_micros; });
            buffer_.insert(pos, pkt);
        }
        // Storage holds up to twice the capacity so eviction is amortized.
        if (buffer_.size() >= 2 * history_capacity)
            buffer_.erase(buffer_.begin(), buffer_.end() - static_cast<std::ptrdiff_t>(history_capacity));
    }

private:
    Ipv4 device_;
    std::vector<DirectionalPacket> buffer_;
    std::uint64_t total_seen_ = 0;
};

/// Streams keyed by device address. One writer at a time.
class Tracker {
public:
    const std::map<Ipv4, DeviceStream>& streams() const { return streams_; }

    const DeviceStream* find(Ipv4 device) const {
        auto it = streams_.find(device);
        return it == streams_.end() ? nullptr : &it->second;
    }

    DeviceStream& stream(Ipv4 device) {
        auto [it, inserted] = streams_.try_emplace(device, device);
        return it->second;
    }

private:
    std::map<Ipv4, DeviceStream> streams_;
};

/// Routes a packet to the stream of each endpoint that is a tracked device.
/// Returns the number of streams the packet was appended to.
inline int ingest_packet(Tracker& tracker, const PacketRecord& pkt, const std::set<Ipv4>& devices) {
    int touched = 0;
    if (devices.contains(pkt.src_ip)) {
        tracker.stream(pkt.src_ip).push(as_seen_by(pkt.src_ip, pkt));
        ++touched;
    }
    if (pkt.dst_ip != pkt.src_ip && devices.contains(pkt.dst_ip)) {
        tracker.stream(pkt.dst_ip).push(as_seen_by(pkt.dst_ip, pkt));
        ++touched;
    }
    return touched;
}

class EmptyWindow : public std::invalid_argument {
public:
    EmptyWindow() : std::invalid_argument("empty packet window") {}
};

namespace detail {

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

template <class Fn>
MeanStd mean_std(std::size_t n, Fn value) {
    if (n == 0) return {};
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += value(i);
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = value(i) - mean;
        sq += d * d;
    }
    return {mean, std::sqrt(sq / static_cast<double>(n))};
}

inline std::size_t count_distinct(std::vector<std::uint16_t>& ports) {
    std::sort(ports.begin(), ports.end());
    return static_cast<std::size_t>(std::unique(ports.begin(), ports.end()) - ports.begin());
}

}  // namespace detail

/// The 13 window statistics in Feature order. Standard deviations use the
/// population (N) denominator. Throws EmptyWindow for an empty window.
inline WindowStats window_features(std::span<const DirectionalPacket> w, const WindowConfig& cfg = {}) {
    if (w.empty()) throw EmptyWindow();
    const std::size_t n = w.size();
    WindowStats out{};

    // Per-second packet counts over every whole second the window touches,
    // including empty seconds. Timestamps are non-negative, so division floors.
    {
        const std::int64_t first_sec = w.front().ts_micros / 1'000'000;
        const std::int64_t last_sec = w.back().ts_micros / 1'000'000;
        const double bins = static_cast<double>(last_sec - first_sec + 1);
        const double mean = static_cast<double>(n) / bins;
        double sq = 0.0;
        std::size_t occupied = 0;
        for (std::size_t i = 0; i < n;) {
            const std::int64_t sec = w[i].ts_micros / 1'000'000;
            std::size_t j = i;
            while (j < n && w[j].ts_micros / 1'000'000 == sec) ++j;
            const double d = static_cast<double>(j - i) - mean;
            sq += d * d;
            ++occupied;
            i = j;
        }
        sq += (bins - static_cast<double>(occupied)) * mean * mean;
        out[pkt_count_mean] = mean;
        out[pkt_count_std] = std::sqrt(sq / bins);
    }

    const auto len = detail::mean_std(n, [&](std::size_t i) { return static_cast<double>(w[i].length); });
    out[len_mean] = len.mean;
    out[len_std] = len.std;

    const auto gap = [&](std::size_t i) { return static_cast<double>(w[i + 1].ts_micros - w[i].ts_micros) / 1e6; };
    const auto iat = detail::mean_std(n - 1, gap);
    out[iat_mean] = iat.mean;
    out[iat_std] = iat.std;

    std::vector<std::uint16_t> local;
    std::vector<std::uint16_t> remote;
    std::size_t tcp = 0;
    std::size_t psh = 0;
    std::size_t urg = 0;
    for (const auto& p : w) {
        if (p.protocol != Protocol::other) {
            local.push_back(p.local_port);
            remote.push_back(p.remote_port);
        }
        if (p.protocol == Protocol::tcp) ++tcp;
        if (p.tcp_flags & tcp_flag::psh) ++psh;
        if (p.tcp_flags & tcp_flag::urg) ++urg;
    }
    out[uniq_local_ports] = static_cast<double>(detail::count_distinct(local));
    out[uniq_remote_ports] = static_cast<double>(detail::count_distinct(remote));
    out[tcp_ratio] = static_cast<double>(tcp) / static_cast<double>(n);
    out[psh_count] = static_cast<double>(psh);
    out[urg_count] = static_cast<double>(urg);

    double idle = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double g = gap(i);
        if (g > cfg.idle_threshold_s) idle += g;
    }
    const double span = static_cast<double>(w.back().ts_micros - w.front().ts_micros) / 1e6;
    out[idle_secs] = idle;
    out[active_secs] = span - idle;
    return out;
}

/// One 52-value sample: window order 50, 100, 500, 2000.
struct FeatureVector {
    Ipv4 device_ip;
    Values values{};
    Label label = Label::unlabeled;
    /// Timestamp of the last packet in the device history at extraction.
    std::int64_t ts_micros = 0;
};

inline FeatureVector feature_vector(const DeviceStream& stream, const WindowConfig& cfg = {}) {
    FeatureVector fv;
    fv.device_ip = stream.device_ip();
    const auto hist = stream.history();
    if (hist.empty()) return fv;
    fv.ts_micros = hist.back().ts_micros;
    for (std::size_t k = 0; k < window_sizes.size(); ++k) {
        const auto window = hist.last(std::min(window_sizes[k], hist.size()));
        const auto stats = window_features(window, cfg);
        std::copy(stats.begin(), stats.end(), fv.values.begin() + static_cast<std::ptrdiff_t>(k * features_per_window));
    }
    return fv;
}

/// Column name of flat feature index i ("f00".."f51").
inline std::string column_name(std::size_t i) {
    return std::string("f") + static_cast<char>('0' + i / 10) + static_cast<char>('0' + i % 10);
}

/// Samples as columns of a vector_dim x N matrix.
inline Eigen::MatrixXd to_matrix(std::span<const FeatureVector> vectors) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(vector_dim), static_cast<Eigen::Index>(vectors.size()));
    for (std::size_t j = 0; j < vectors.size(); ++j)
        for (std::size_t i = 0; i < vector_dim; ++i)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vectors[j].values[i];
    return m;
}

/// Per-dimension z-score statistics (population std).
struct NormStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;
};

inline constexpr double min_std = 1e-9;

inline NormStats fit_norm(const Eigen::MatrixXd& samples) {
    NormStats s;
    const auto n = static_cast<double>(samples.cols());
    s.mean = samples.rowwise().sum() / n;
    s.std = ((samples.colwise() - s.mean).array().square().rowwise().sum() / n).sqrt().matrix();
    return s;
}

/// Z-scores samples (columns) with the given stats, or with stats fitted on
/// the samples themselves. Dimensions whose std is below min_std map to 0.
inline std::pair<Eigen::MatrixXd, NormStats> normalize(const Eigen::MatrixXd& samples,
                                                       std::optional<NormStats> stats = std::nullopt) {
    NormStats s = stats ? std::move(*stats) : fit_norm(samples);
    if (s.mean.size() != samples.rows() || s.std.size() != samples.rows())
        throw std::invalid_argument("normalization stats do not match sample dimension");
    Eigen::MatrixXd out(samples.rows(), samples.cols());
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
        if (s.std(i) < min_std)
            out.row(i).setZero();
        else
            out.row(i) = (samples.row(i).array() - s.mean(i)) / s.std(i);
    }
    return {std::move(out), std::move(s)};
}

}  // namespace iotgan::features
