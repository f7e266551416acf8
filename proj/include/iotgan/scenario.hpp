#pragma once

// Scenario files: versioned JSON describing devices, attacks, sampling and
// the optional darknet-profile dataset. See README for the schema.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "iotgan/sim.hpp"

namespace iotgan::sim {

inline constexpr int scenario_version = 1;

struct Scenario {
    DatasetSpec dataset;
    /// Darknet-profile training data: scan traffic seen at a telescope.
    std::optional<DatasetSpec> darknet;
    double test_fraction = 0.2;
};

namespace detail {

using nlohmann::json;

template <class T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

inline Ipv4 read_ip(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
    return Ipv4::parse(j.at(key).get<std::string>());
}

inline std::vector<Ipv4> read_ips(const json& j, const char* key) {
    std::vector<Ipv4> out;
    if (j.contains(key))
        for (const auto& s : j.at(key)) out.push_back(Ipv4::parse(s.get<std::string>()));
    return out;
}

inline DeviceProfile read_device(const json& j) {
    DeviceProfile p = default_profile(parse_device_kind(j.at("kind").get<std::string>()), read_ip(j, "ip"),
                                      read_ips(j, "peers"));
    read_opt(j, "rate_pps", p.rate_pps);
    if (j.contains("length")) {
        const auto& l = j.at("length");
        read_opt(l, "mean", p.length.mean);
        read_opt(l, "std", p.length.std);
        read_opt(l, "min", p.length.min);
        read_opt(l, "max", p.length.max);
    }
    read_opt(j, "tcp_fraction", p.tcp_fraction);
    read_opt(j, "psh_prob", p.psh_prob);
    read_opt(j, "on_s", p.on_s);
    read_opt(j, "off_s", p.off_s);
    read_opt(j, "outbound_fraction", p.outbound_fraction);
    read_opt(j, "response_prob", p.response_prob);
    read_opt(j, "remote_ports", p.remote_ports);
    return p;
}

inline AttackScenario read_attack(const json& j) {
    AttackScenario a;
    a.kind = parse_attack_kind(j.at("kind").get<std::string>());
    a.source = read_ip(j, "source");
    a.target = read_ip(j, "target");
    read_opt(j, "source_count", a.source_count);
    read_opt(j, "target_prefix", a.target_prefix);
    read_opt(j, "start_s", a.start_s);
    read_opt(j, "intensity_pps", a.intensity_pps);
    read_opt(j, "duration_s", a.duration_s);
    read_opt(j, "flood_len", a.flood_len);
    return a;
}

inline DatasetSpec read_dataset(const json& j, std::string name, std::uint64_t seed) {
    DatasetSpec d;
    d.name = std::move(name);
    d.seed = seed;
    read_opt(j, "duration_s", d.duration_s);
    read_opt(j, "sample_interval_s", d.sample_interval_s);
    if (j.contains("quota")) {
        read_opt(j.at("quota"), "benign", d.quota.benign);
        read_opt(j.at("quota"), "malicious", d.quota.malicious);
    }
    if (j.contains("devices"))
        for (const auto& dj : j.at("devices")) d.devices.push_back(read_device(dj));
    d.monitored = read_ips(j, "monitored");
    if (j.contains("attacks"))
        for (const auto& aj : j.at("attacks")) d.attacks.push_back(read_attack(aj));
    d.validate();
    return d;
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
    }
    try {
        const int version = j.value("version", 0);
        if (version != scenario_version)
            throw ConfigError("unsupported scenario version " + std::to_string(version));
        Scenario s;
        const std::string name = j.value("name", std::string("scenario"));
        const auto seed = j.value("seed", std::uint64_t{0});
        s.dataset = detail::read_dataset(j, name, seed);
        if (j.contains("test_fraction")) s.test_fraction = j.at("test_fraction").get<double>();
        if (!(s.test_fraction > 0 && s.test_fraction < 1)) throw ConfigError("test_fraction must lie in (0, 1)");
        if (j.contains("darknet")) s.darknet = detail::read_dataset(j.at("darknet"), name + "-darknet", mix_seed(seed, 77));
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad scenario field: ") + e.what());
    }
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

/// Same scenario with every derived seed re-rooted at `seed`.
inline Scenario with_seed(Scenario s, std::uint64_t seed) {
    s.dataset.seed = seed;
    if (s.darknet) s.darknet->seed = mix_seed(seed, 77);
    return s;
}

}  // namespace iotgan::sim
