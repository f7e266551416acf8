#pragma once

// Seeded synthetic IoT traffic: benign device profiles, attack scenarios and
// the labeled dataset generator built on top of them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "iotgan/feature_csv.hpp"
#include "iotgan/packet.hpp"
#include "iotgan/pcap.hpp"
#include "iotgan/seed.hpp"

namespace iotgan::sim {

using Rng = std::mt19937_64;

/// All simulated captures start here (2023-11-14T22:13:20Z).
inline constexpr std::int64_t epoch_micros = 1'700'000'000LL * 1'000'000LL;

inline std::int64_t to_micros(double seconds) { return static_cast<std::int64_t>(std::llround(seconds * 1e6)); }

using iotgan::mix_seed;

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class DeviceKind { webcam_stream, wifi_router, ip_camera_idle };

inline const char* to_string(DeviceKind k) {
    switch (k) {
    case DeviceKind::webcam_stream: return "webcam_stream";
    case DeviceKind::wifi_router: return "wifi_router";
    case DeviceKind::ip_camera_idle: return "ip_camera_idle";
    }
    return "webcam_stream";
}

inline DeviceKind parse_device_kind(const std::string& s) {
    if (s == "webcam_stream") return DeviceKind::webcam_stream;
    if (s == "wifi_router") return DeviceKind::wifi_router;
    if (s == "ip_camera_idle") return DeviceKind::ip_camera_idle;
    throw ConfigError("unknown device kind: " + s);
}

struct LengthDist {
    double mean = 200;
    double std = 50;
    double min = 60;
    double max = 1514;
};

struct DeviceProfile {
    DeviceKind kind = DeviceKind::webcam_stream;
    Ipv4 device_ip;
    std::vector<Ipv4> peer_ips;
    /// Mean packets per second while the duty cycle is on, responses included.
    double rate_pps = 10;
    LengthDist length;
    double tcp_fraction = 1.0;
    double psh_prob = 0.0;
    /// On/off session cycle in seconds; off_s == 0 means always on.
    double on_s = 1.0;
    double off_s = 0.0;
    /// Probability that a packet is sent by the device rather than received.
    double outbound_fraction = 0.5;
    /// Probability that a request is answered by a reverse-direction packet.
    double response_prob = 0.0;
    std::vector<std::uint16_t> remote_ports = {443};

    void validate() const {
        if (!(rate_pps > 0)) throw ConfigError("device rate must be positive");
        if (peer_ips.empty()) throw ConfigError("device needs at least one peer");
        if (remote_ports.empty()) throw ConfigError("device needs at least one remote port");
        if (!(length.min >= 60 && length.max <= 1514 && length.min <= length.max))
            throw ConfigError("length bounds must lie within [60, 1514]");
        if (!(length.std >= 0)) throw ConfigError("length std must be non-negative");
        for (double p : {tcp_fraction, psh_prob, outbound_fraction, response_prob})
            if (!(p >= 0 && p <= 1)) throw ConfigError("probabilities must lie in [0, 1]");
        if (!(on_s > 0) || !(off_s >= 0)) throw ConfigError("duty cycle needs on_s > 0 and off_s >= 0");
    }
};

/// Built-in parameters for each device kind.
inline DeviceProfile default_profile(DeviceKind kind, Ipv4 device, std::vector<Ipv4> peers) {
    DeviceProfile p;
    p.kind = kind;
    p.device_ip = device;
    p.peer_ips = std::move(peers);
    switch (kind) {
    case DeviceKind::webcam_stream:
        p.rate_pps = 30;
        p.length = {1100, 250, 60, 1514};
        p.tcp_fraction = 0.95;
        p.psh_prob = 0.3;
        p.on_s = 120;
        p.off_s = 20;
        p.outbound_fraction = 0.85;
        p.remote_ports = {443, 554};
        break;
    case DeviceKind::wifi_router:
        p.rate_pps = 8;
        p.length = {180, 90, 60, 1514};
        p.tcp_fraction = 0.35;
        p.psh_prob = 0.4;
        p.on_s = 30;
        p.off_s = 5;
        p.outbound_fraction = 0.5;
        p.response_prob = 0.9;
        p.remote_ports = {53, 123, 80, 443};
        break;
    case DeviceKind::ip_camera_idle:
        p.rate_pps = 1.5;
        p.length = {140, 40, 60, 600};
        p.tcp_fraction = 1.0;
        p.psh_prob = 0.5;
        p.on_s = 1;
        p.off_s = 0;
        p.outbound_fraction = 0.6;
        p.response_prob = 0.5;
        p.remote_ports = {8883};
        break;
    }
    return p;
}

namespace detail {

inline std::uint32_t draw_length(Rng& rng, const LengthDist& d) {
    std::normal_distribution<double> normal(d.mean, d.std);
    double v = d.mean;
    for (int i = 0; i < 64; ++i) {
        v = d.std > 0 ? normal(rng) : d.mean;
        if (v >= d.min && v <= d.max) break;
    }
    return static_cast<std::uint32_t>(std::lround(std::clamp(v, d.min, d.max)));
}

inline std::uint16_t ephemeral_port(Rng& rng) {
    return static_cast<std::uint16_t>(std::uniform_int_distribution<int>(32768, 60999)(rng));
}

template <class T>
const T& pick(Rng& rng, const std::vector<T>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

inline PacketRecord make_packet(std::int64_t ts, Ipv4 src, Ipv4 dst, Protocol proto, std::uint16_t sport,
                                std::uint16_t dport, std::uint8_t flags, std::uint32_t len) {
    PacketRecord p;
    p.ts_micros = ts;
    p.src_ip = src;
    p.dst_ip = dst;
    p.protocol = proto;
    if (proto != Protocol::other) {
        p.src_port = sport;
        p.dst_port = dport;
    }
    p.tcp_flags = proto == Protocol::tcp ? flags : 0;
    p.frame_len = len;
    return p;
}

inline void sort_by_time(std::vector<PacketRecord>& pkts) {
    std::stable_sort(pkts.begin(), pkts.end(),
                     [](const PacketRecord& a, const PacketRecord& b) { return a.ts_micros < b.ts_micros; });
}

inline void make_strictly_increasing(std::vector<PacketRecord>& pkts) {
    for (std::size_t i = 1; i < pkts.size(); ++i)
        if (pkts[i].ts_micros <= pkts[i - 1].ts_micros) pkts[i].ts_micros = pkts[i - 1].ts_micros + 1;
}

}  // namespace detail

/// Poisson traffic of one device over [0, duration_s), silent during the off
/// part of its duty cycle. Timestamps are strictly increasing.
inline std::vector<PacketRecord> simulate_benign(const DeviceProfile& profile, double duration_s, std::uint64_t seed) {
    if (!(duration_s > 0)) throw ConfigError("duration must be positive");
    profile.validate();
    Rng rng(seed);
    const double period = profile.on_s + profile.off_s;
    const double phase = profile.off_s > 0 ? std::uniform_real_distribution<double>(0, period)(rng) : 0.0;
    // Requests arrive at rate / (1 + response_prob) so total packets match rate_pps.
    std::exponential_distribution<double> gap(profile.rate_pps / (1.0 + profile.response_prob));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<PacketRecord> out;
    long session = -1;
    std::uint16_t local_port = 0;
    double t = 0;
    while (true) {
        t += gap(rng);
        if (t >= duration_s) break;
        const double cycle_pos = std::fmod(t + phase, period);
        if (profile.off_s > 0 && cycle_pos >= profile.on_s) continue;
        const long this_session = profile.off_s > 0 ? static_cast<long>((t + phase) / period) : 0;
        if (this_session != session) {
            session = this_session;
            local_port = detail::ephemeral_port(rng);
        }

        const Ipv4 peer = detail::pick(rng, profile.peer_ips);
        const std::uint16_t remote_port = detail::pick(rng, profile.remote_ports);
        const Protocol proto = unit(rng) < profile.tcp_fraction ? Protocol::tcp : Protocol::udp;
        const bool outbound = unit(rng) < profile.outbound_fraction;
        auto flags = [&] {
            std::uint8_t f = tcp_flag::ack;
            if (unit(rng) < profile.psh_prob) f |= tcp_flag::psh;
            return f;
        };
        const std::int64_t ts = epoch_micros + to_micros(t);
        const Ipv4 src = outbound ? profile.device_ip : peer;
        const Ipv4 dst = outbound ? peer : profile.device_ip;
        const std::uint16_t sport = outbound ? local_port : remote_port;
        const std::uint16_t dport = outbound ? remote_port : local_port;
        out.push_back(detail::make_packet(ts, src, dst, proto, sport, dport, flags(), detail::draw_length(rng, profile.length)));

        if (unit(rng) < profile.response_prob) {
            const double delay = std::uniform_real_distribution<double>(0.001, 0.030)(rng);
            if (t + delay < duration_s)
                out.push_back(detail::make_packet(ts + to_micros(delay), dst, src, proto, dport, sport, flags(),
                                                  detail::draw_length(rng, profile.length)));
        }
    }
    detail::sort_by_time(out);
    detail::make_strictly_increasing(out);
    return out;
}

enum class AttackKind { nmap_syn_scan, telnet_bruteforce, udp_flood, darknet_scan_background, cnc_beacon };

inline const char* to_string(AttackKind k) {
    switch (k) {
    case AttackKind::nmap_syn_scan: return "nmap_syn_scan";
    case AttackKind::telnet_bruteforce: return "telnet_bruteforce";
    case AttackKind::udp_flood: return "udp_flood";
    case AttackKind::darknet_scan_background: return "darknet_scan_background";
    case AttackKind::cnc_beacon: return "cnc_beacon";
    }
    return "nmap_syn_scan";
}

class UnknownKind : public ConfigError {
public:
    explicit UnknownKind(const std::string& kind) : ConfigError("unknown attack kind: " + kind) {}
};

inline AttackKind parse_attack_kind(const std::string& s) {
    for (auto k : {AttackKind::nmap_syn_scan, AttackKind::telnet_bruteforce, AttackKind::udp_flood,
                   AttackKind::darknet_scan_background, AttackKind::cnc_beacon})
        if (s == to_string(k)) return k;
    throw UnknownKind(s);
}

/// Ports probed by Mirai-style scanners.
inline constexpr std::array<std::uint16_t, 5> scan_ports = {23, 2323, 80, 8080, 443};

struct AttackScenario {
    AttackKind kind = AttackKind::nmap_syn_scan;
    Ipv4 source;
    Ipv4 target;
    /// darknet_scan_background: sources rotate over source .. source+source_count-1.
    std::uint32_t source_count = 1;
    /// Destinations are drawn from target's network of this prefix length (32 = exactly target).
    int target_prefix = 32;
    double start_s = 0;
    double intensity_pps = 100;
    double duration_s = 1;
    std::uint64_t seed = 0;
    /// udp_flood frame length.
    std::uint32_t flood_len = 554;

    void validate() const {
        if (!(duration_s > 0)) throw ConfigError("attack duration must be positive");
        if (!(intensity_pps > 0)) throw ConfigError("attack intensity must be positive");
        if (!(start_s >= 0)) throw ConfigError("attack start must be non-negative");
        if (source_count < 1) throw ConfigError("source_count must be >= 1");
        if (target_prefix < 0 || target_prefix > 32) throw ConfigError("target_prefix must lie in [0, 32]");
        if (flood_len < 60 || flood_len > 1514) throw ConfigError("flood_len must lie in [60, 1514]");
    }
};

namespace detail {

inline Ipv4 draw_in_prefix(Rng& rng, Ipv4 base, int prefix) {
    if (prefix >= 32) return base;
    const std::uint32_t host_bits = 32 - static_cast<std::uint32_t>(prefix);
    const std::uint32_t mask = host_bits == 32 ? 0xffffffffu : ((1u << host_bits) - 1);
    const std::uint32_t host = static_cast<std::uint32_t>(rng()) & mask;
    return Ipv4((base.value() & ~mask) | host);
}

}  // namespace detail

/// Packet stream of one attack. Timestamps start at epoch + start_s.
inline std::vector<PacketRecord> simulate_attack(const AttackScenario& sc) {
    sc.validate();
    Rng rng(sc.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::exponential_distribution<double> poisson_gap(sc.intensity_pps);
    const std::int64_t t0 = epoch_micros + to_micros(sc.start_s);
    const double end = sc.duration_s;
    std::vector<PacketRecord> out;
    using detail::make_packet;

    switch (sc.kind) {
    case AttackKind::nmap_syn_scan: {
        // One SYN per port, sequential ports, evenly paced with +-10% jitter.
        const auto count = static_cast<std::size_t>(std::llround(sc.intensity_pps * sc.duration_s));
        const double step = 1.0 / sc.intensity_pps;
        const std::uint16_t sport = detail::ephemeral_port(rng);
        for (std::size_t i = 0; i < count; ++i) {
            const double t = (static_cast<double>(i) + 0.1 * (unit(rng) - 0.5)) * step;
            const auto port = static_cast<std::uint16_t>(1 + i % 65535);
            out.push_back(make_packet(t0 + to_micros(std::max(t, 0.0)), sc.source,
                                      detail::draw_in_prefix(rng, sc.target, sc.target_prefix), Protocol::tcp, sport,
                                      port, tcp_flag::syn, 60));
        }
        break;
    }
    case AttackKind::telnet_bruteforce: {
        // Each login attempt is a short telnet session of 10 packets.
        const double session_gap = 10.0 / sc.intensity_pps;
        std::uniform_int_distribution<int> cred_len(66, 90);
        double t = 0;
        while (t < end) {
            const Ipv4 a = sc.source;
            const Ipv4 v = detail::draw_in_prefix(rng, sc.target, sc.target_prefix);
            const std::uint16_t sp = detail::ephemeral_port(rng);
            struct Step {
                bool from_attacker;
                std::uint8_t flags;
                std::uint32_t len;
            };
            const auto cl = [&] { return static_cast<std::uint32_t>(cred_len(rng)); };
            const std::array<Step, 10> session = {{
                {true, tcp_flag::syn, 60},
                {false, tcp_flag::syn | tcp_flag::ack, 60},
                {true, tcp_flag::ack, 60},
                {false, tcp_flag::psh | tcp_flag::ack, 78},   // login prompt
                {true, tcp_flag::psh | tcp_flag::ack, cl()},  // username
                {false, tcp_flag::psh | tcp_flag::ack, 76},   // password prompt
                {true, tcp_flag::psh | tcp_flag::ack, cl()},  // password
                {false, tcp_flag::psh | tcp_flag::ack, 84},   // login incorrect
                {true, tcp_flag::fin | tcp_flag::ack, 60},
                {false, tcp_flag::fin | tcp_flag::ack, 60},
            }};
            double st = t;
            for (const auto& s : session) {
                if (st >= end) break;
                out.push_back(s.from_attacker ? make_packet(t0 + to_micros(st), a, v, Protocol::tcp, sp, 23, s.flags, s.len)
                                              : make_packet(t0 + to_micros(st), v, a, Protocol::tcp, 23, sp, s.flags, s.len));
                st += std::uniform_real_distribution<double>(0.002, 0.020)(rng);
            }
            t = st + session_gap * std::uniform_real_distribution<double>(0.5, 1.5)(rng);
        }
        break;
    }
    case AttackKind::udp_flood: {
        const Ipv4 victim = detail::draw_in_prefix(rng, sc.target, sc.target_prefix);
        const auto dport = static_cast<std::uint16_t>(std::uniform_int_distribution<int>(1, 1023)(rng));
        for (double t = poisson_gap(rng); t < end; t += poisson_gap(rng))
            out.push_back(make_packet(t0 + to_micros(t), sc.source, victim, Protocol::udp, detail::ephemeral_port(rng),
                                      dport, 0, sc.flood_len));
        break;
    }
    case AttackKind::darknet_scan_background: {
        std::discrete_distribution<std::size_t> port_pick({0.55, 0.15, 0.12, 0.10, 0.08});
        std::uniform_int_distribution<std::uint32_t> src_pick(0, sc.source_count - 1);
        for (double t = poisson_gap(rng); t < end; t += poisson_gap(rng)) {
            const Ipv4 src(sc.source.value() + src_pick(rng));
            out.push_back(make_packet(t0 + to_micros(t), src, detail::draw_in_prefix(rng, sc.target, sc.target_prefix),
                                      Protocol::tcp, detail::ephemeral_port(rng), scan_ports[port_pick(rng)],
                                      tcp_flag::syn, 60));
        }
        break;
    }
    case AttackKind::cnc_beacon: {
        // Two-packet check-in every period, +-5% jitter.
        const double period = 2.0 / sc.intensity_pps;
        const std::uint16_t sp = detail::ephemeral_port(rng);
        for (double t = unit(rng) * period; t < end; t += period * (0.95 + 0.1 * unit(rng))) {
            out.push_back(make_packet(t0 + to_micros(t), sc.source, sc.target, Protocol::tcp, sp, 6667,
                                      tcp_flag::psh | tcp_flag::ack, std::uniform_int_distribution<std::uint32_t>(70, 90)(rng)));
            const double reply = t + std::uniform_real_distribution<double>(0.02, 0.15)(rng);
            if (reply < end)
                out.push_back(make_packet(t0 + to_micros(reply), sc.target, sc.source, Protocol::tcp, 6667, sp,
                                          tcp_flag::psh | tcp_flag::ack, std::uniform_int_distribution<std::uint32_t>(64, 74)(rng)));
        }
        break;
    }
    }
    detail::sort_by_time(out);
    return out;
}

// ---------------------------------------------------------------------------
// Dataset generation.

struct Quota {
    std::size_t benign = 0;
    std::size_t malicious = 0;
};

struct DatasetSpec {
    std::string name = "unnamed";
    std::uint64_t seed = 0;
    double duration_s = 60;
    double sample_interval_s = 1.0;
    /// Zero counts keep every candidate sample of that class.
    Quota quota;
    std::vector<DeviceProfile> devices;
    /// Addresses tracked as devices without benign traffic of their own.
    std::vector<Ipv4> monitored;
    std::vector<AttackScenario> attacks;

    std::set<Ipv4> device_set() const {
        std::set<Ipv4> s(monitored.begin(), monitored.end());
        for (const auto& d : devices) s.insert(d.device_ip);
        return s;
    }

    void validate() const {
        if (!(duration_s > 0)) throw ConfigError("dataset duration must be positive");
        if (!(sample_interval_s > 0)) throw ConfigError("sample interval must be positive");
        if (devices.empty() && monitored.empty()) throw ConfigError("dataset needs at least one device");
        for (const auto& d : devices) d.validate();
        for (const auto& a : attacks) a.validate();
    }
};

/// Records in capture order with a parallel attack tag per record.
struct TaggedCapture {
    std::vector<PacketRecord> records;
    std::vector<std::uint8_t> is_attack;
};

/// Runs every device and attack of the spec and merges them by timestamp
/// (ties keep device order, then attack order).
inline TaggedCapture simulate_capture(const DatasetSpec& spec) {
    spec.validate();
    struct Item {
        PacketRecord rec;
        std::uint8_t attack;
    };
    std::vector<Item> all;
    for (std::size_t i = 0; i < spec.devices.size(); ++i)
        for (const auto& p : simulate_benign(spec.devices[i], spec.duration_s, mix_seed(spec.seed, i)))
            all.push_back({p, 0});
    for (std::size_t j = 0; j < spec.attacks.size(); ++j) {
        AttackScenario sc = spec.attacks[j];
        sc.seed = mix_seed(spec.seed, 1000 + j);
        for (const auto& p : simulate_attack(sc))
            if (p.ts_micros < epoch_micros + to_micros(spec.duration_s)) all.push_back({p, 1});
    }
    std::stable_sort(all.begin(), all.end(),
                     [](const Item& a, const Item& b) { return a.rec.ts_micros < b.rec.ts_micros; });
    TaggedCapture cap;
    cap.records.reserve(all.size());
    cap.is_attack.reserve(all.size());
    for (const auto& it : all) {
        cap.records.push_back(it.rec);
        cap.is_attack.push_back(it.attack);
    }
    return cap;
}

struct ExtractOptions {
    double sample_interval_s = 1.0;
    features::WindowConfig window;
};

/// Replays a capture through per-device trackers and takes a feature vector
/// of every device with traffic at each sampling instant
/// (first record time + k * interval). With attack tags, a vector is
/// malicious iff any tagged packet sits in that device's history; without
/// tags every vector is unlabeled.
inline std::vector<features::FeatureVector> extract_vectors(std::span<const PacketRecord> records,
                                                            const std::set<Ipv4>& devices,
                                                            const ExtractOptions& opts,
                                                            std::span<const std::uint8_t> is_attack = {}) {
    if (!(opts.sample_interval_s > 0)) throw ConfigError("sample interval must be positive");
    const bool labeled = !is_attack.empty();
    if (labeled && is_attack.size() != records.size())
        throw std::invalid_argument("attack tags do not match record count");
    std::vector<features::FeatureVector> out;
    if (records.empty()) return out;

    features::Tracker tracker;
    // Rolling attack-tag window per device, aligned with its history.
    struct TagWindow {
        std::vector<std::uint8_t> tags;
        std::size_t head = 0;
        std::size_t attacks = 0;
        void push(std::uint8_t t) {
            if (tags.size() < features::history_capacity) {
                tags.push_back(t);
            } else {
                attacks -= tags[head];
                tags[head] = t;
                head = (head + 1) % features::history_capacity;
            }
            attacks += t;
        }
    };
    std::map<Ipv4, TagWindow> tag_windows;

    const std::int64_t step = to_micros(opts.sample_interval_s);
    if (step <= 0) throw ConfigError("sample interval below one microsecond");
    const std::int64_t start = records.front().ts_micros;
    std::int64_t next_sample = start + step;

    auto emit = [&](std::int64_t at) {
        for (const auto& [ip, stream] : tracker.streams()) {
            auto fv = features::feature_vector(stream, opts.window);
            fv.ts_micros = at;
            if (labeled)
                fv.label = tag_windows[ip].attacks > 0 ? features::Label::malicious : features::Label::benign;
            out.push_back(fv);
        }
    };

    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& p = records[i];
        while (p.ts_micros > next_sample) {
            emit(next_sample);
            next_sample += step;
        }
        const std::uint8_t tag = labeled ? is_attack[i] : 0;
        if (devices.contains(p.src_ip)) tag_windows[p.src_ip].push(tag);
        if (p.dst_ip != p.src_ip && devices.contains(p.dst_ip)) tag_windows[p.dst_ip].push(tag);
        features::ingest_packet(tracker, p, devices);
    }
    emit(next_sample);
    return out;
}

class QuotaShortfall : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Dataset {
    std::vector<std::uint8_t> pcap;
    TaggedCapture capture;
    std::vector<features::FeatureVector> vectors;  // export order
    std::size_t benign_candidates = 0;
    std::size_t malicious_candidates = 0;
};

/// Simulates the spec, round-trips the capture through pcap, extracts labeled
/// vectors and draws exactly the quota of each class (seeded, uniform).
inline Dataset generate_dataset(const DatasetSpec& spec) {
    Dataset ds;
    ds.capture = simulate_capture(spec);
    ds.pcap = pcap::write_pcap(ds.capture.records);
    const auto parsed = pcap::parse_pcap(ds.pcap);

    ExtractOptions opts;
    opts.sample_interval_s = spec.sample_interval_s;
    auto candidates = extract_vectors(parsed.records, spec.device_set(), opts, ds.capture.is_attack);

    std::vector<std::size_t> benign;
    std::vector<std::size_t> malicious;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        (candidates[i].label == features::Label::malicious ? malicious : benign).push_back(i);
    ds.benign_candidates = benign.size();
    ds.malicious_candidates = malicious.size();

    Rng rng(mix_seed(spec.seed, 999'999));
    auto take = [&](std::vector<std::size_t>& idx, std::size_t quota, const char* what) {
        if (quota == 0) return;
        if (idx.size() < quota)
            throw QuotaShortfall(std::string("scenario yields ") + std::to_string(idx.size()) + " " + what +
                                 " samples, quota is " + std::to_string(quota));
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(quota);
    };
    take(benign, spec.quota.benign, "benign");
    take(malicious, spec.quota.malicious, "malicious");

    std::vector<std::size_t> keep;
    keep.insert(keep.end(), benign.begin(), benign.end());
    keep.insert(keep.end(), malicious.begin(), malicious.end());
    std::sort(keep.begin(), keep.end());
    for (std::size_t i : keep) ds.vectors.push_back(candidates[i]);
    features::sort_for_export(ds.vectors);
    return ds;
}

/// Label ledger: the attack tag of every record in a simulated capture, in
/// pcap order. Lets `extract` label vectors from a pcap alone.
inline std::string write_ledger(std::span<const std::uint8_t> is_attack) {
    std::string out = "iotgan-ledger 1 " + std::to_string(is_attack.size()) + "\n";
    out.reserve(out.size() + 2 * is_attack.size());
    for (auto t : is_attack) {
        out += t ? '1' : '0';
        out += '\n';
    }
    return out;
}

inline std::vector<std::uint8_t> read_ledger(const std::string& text) {
    std::istringstream in(text);
    std::string magic;
    int version = 0;
    std::size_t n = 0;
    if (!(in >> magic >> version >> n) || magic != "iotgan-ledger") throw ConfigError("not an iotgan label ledger");
    if (version != 1) throw ConfigError("unsupported ledger version " + std::to_string(version));
    std::vector<std::uint8_t> tags;
    tags.reserve(n);
    char c = 0;
    while (in >> c) {
        if (c != '0' && c != '1') throw ConfigError("ledger entries must be 0 or 1");
        tags.push_back(c == '1');
    }
    if (tags.size() != n)
        throw ConfigError("ledger declares " + std::to_string(n) + " records but holds " + std::to_string(tags.size()));
    return tags;
}

}  // namespace iotgan::sim
