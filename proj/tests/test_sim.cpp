#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "iotgan/scenario.hpp"
#include "iotgan/sim.hpp"

using namespace iotgan;
using namespace iotgan::sim;

namespace {

const Ipv4 cam(192, 168, 1, 20);

DeviceProfile webcam() { return default_profile(DeviceKind::webcam_stream, cam, {Ipv4(52, 84, 10, 11)}); }

DatasetSpec small_spec(bool with_attack) {
    DatasetSpec s;
    s.name = "small";
    s.seed = 5;
    s.duration_s = 120;
    s.devices.push_back(webcam());
    s.devices.push_back(default_profile(DeviceKind::ip_camera_idle, Ipv4(192, 168, 1, 21), {Ipv4(54, 230, 1, 5)}));
    if (with_attack) {
        AttackScenario a;
        a.kind = AttackKind::telnet_bruteforce;
        a.source = Ipv4(192, 168, 20, 5);
        a.target = Ipv4(192, 168, 1, 21);
        a.start_s = 60;
        a.intensity_pps = 50;
        a.duration_s = 20;
        s.attacks.push_back(a);
    }
    return s;
}

}  // namespace

TEST(Benign, ThinIntervalAndRejectedDuration) {
    auto p = webcam();
    p.rate_pps = 1;
    p.off_s = 0;
    EXPECT_THROW(simulate_benign(p, 0.0, 1), ConfigError);
    int empty = 0;
    for (std::uint64_t s = 0; s < 100; ++s) empty += simulate_benign(p, 1e-6, s).empty();
    EXPECT_GE(empty, 99);
}

TEST(Benign, Deterministic) {
    EXPECT_EQ(simulate_benign(webcam(), 30, 9), simulate_benign(webcam(), 30, 9));
    EXPECT_NE(simulate_benign(webcam(), 30, 9), simulate_benign(webcam(), 30, 10));
}

TEST(Benign, PoissonCount) {
    auto p = webcam();
    p.rate_pps = 200;
    p.off_s = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto pkts = simulate_benign(p, 10, s);
        EXPECT_NEAR(static_cast<double>(pkts.size()), 2000.0, 134.0) << s;
    }
}

TEST(Benign, RecordsAreValidAndIncreasing) {
    auto p = default_profile(DeviceKind::wifi_router, Ipv4(192, 168, 1, 1), {Ipv4(8, 8, 8, 8)});
    const auto pkts = simulate_benign(p, 60, 3);
    ASSERT_FALSE(pkts.empty());
    for (std::size_t i = 0; i < pkts.size(); ++i) {
        EXPECT_EQ(validate(pkts[i]), "");
        EXPECT_TRUE(pkts[i].src_ip == p.device_ip || pkts[i].dst_ip == p.device_ip);
        if (i) EXPECT_LT(pkts[i - 1].ts_micros, pkts[i].ts_micros);
    }
}

TEST(Attack, NmapHundredPorts) {
    AttackScenario a;
    a.kind = AttackKind::nmap_syn_scan;
    a.source = Ipv4(10, 0, 0, 66);
    a.target = cam;
    a.intensity_pps = 100;
    a.duration_s = 1;
    const auto pkts = simulate_attack(a);
    ASSERT_EQ(pkts.size(), 100u);
    std::set<std::uint16_t> ports;
    for (const auto& p : pkts) {
        EXPECT_EQ(p.tcp_flags, tcp_flag::syn);
        ports.insert(p.dst_port);
    }
    EXPECT_EQ(ports.size(), 100u);
}

TEST(Attack, UdpFloodCountAndShape) {
    AttackScenario a;
    a.kind = AttackKind::udp_flood;
    a.source = cam;
    a.target = Ipv4(203, 0, 113, 80);
    a.intensity_pps = 1000;
    a.duration_s = 2;
    a.seed = 4;
    const auto pkts = simulate_attack(a);
    EXPECT_NEAR(static_cast<double>(pkts.size()), 2000.0, 3 * std::sqrt(2000.0));
    for (const auto& p : pkts) {
        EXPECT_EQ(p.protocol, Protocol::udp);
        EXPECT_EQ(p.frame_len, pkts[0].frame_len);
        EXPECT_EQ(p.dst_port, pkts[0].dst_port);
    }
}

TEST(Attack, TelnetTargetsPort23WithPshCredentials) {
    AttackScenario a;
    a.kind = AttackKind::telnet_bruteforce;
    a.source = Ipv4(192, 168, 20, 5);
    a.target = cam;
    a.intensity_pps = 50;
    a.duration_s = 5;
    const auto pkts = simulate_attack(a);
    ASSERT_FALSE(pkts.empty());
    for (const auto& p : pkts) {
        const bool from_attacker = p.src_ip == a.source;
        EXPECT_EQ(from_attacker ? p.dst_port : p.src_port, 23);
        // credential packets: attacker data carrying a payload
        if (from_attacker && p.frame_len > 60) EXPECT_TRUE(p.has(tcp_flag::psh));
    }
}

TEST(Attack, DarknetSourcesAndPrefix) {
    AttackScenario a;
    a.kind = AttackKind::darknet_scan_background;
    a.source = Ipv4(45, 12, 0, 1);
    a.source_count = 4;
    a.target = Ipv4(44, 0, 0, 0);
    a.target_prefix = 8;
    a.intensity_pps = 200;
    a.duration_s = 5;
    for (const auto& p : simulate_attack(a)) {
        EXPECT_GE(p.src_ip.value(), a.source.value());
        EXPECT_LT(p.src_ip.value(), a.source.value() + 4);
        EXPECT_EQ(p.dst_ip.value() >> 24, 44u);
        EXPECT_EQ(p.tcp_flags, tcp_flag::syn);
    }
}

TEST(Attack, UnknownKindAndValidation) {
    EXPECT_THROW(parse_attack_kind("smurf"), UnknownKind);
    AttackScenario a;
    a.duration_s = 0;
    EXPECT_THROW(simulate_attack(a), ConfigError);
}

TEST(Dataset, BenignOnlyIsAllBenign) {
    auto spec = small_spec(false);
    const auto ds = generate_dataset(spec);
    ASSERT_FALSE(ds.vectors.empty());
    for (const auto& v : ds.vectors) EXPECT_EQ(v.label, features::Label::benign);
}

TEST(Dataset, LabelsFollowAttackPackets) {
    const auto spec = small_spec(true);
    const auto ds = generate_dataset(spec);
    std::size_t mal = 0;
    for (const auto& v : ds.vectors)
        if (v.label == features::Label::malicious) {
            ++mal;
            EXPECT_EQ(v.device_ip, Ipv4(192, 168, 1, 21));
            EXPECT_GE(v.ts_micros, epoch_micros + to_micros(60));
        }
    EXPECT_GT(mal, 0u);
    EXPECT_EQ(mal, ds.malicious_candidates);
}

TEST(Dataset, QuotaAndDeterminism) {
    auto spec = small_spec(true);
    spec.quota = {50, 10};
    const auto a = generate_dataset(spec);
    const auto b = generate_dataset(spec);
    EXPECT_EQ(a.pcap, b.pcap);
    EXPECT_EQ(features::write_feature_csv(a.vectors), features::write_feature_csv(b.vectors));
    std::size_t mal = 0;
    for (const auto& v : a.vectors) mal += v.label == features::Label::malicious;
    EXPECT_EQ(mal, 10u);
    EXPECT_EQ(a.vectors.size(), 60u);
    spec.quota = {1'000'000, 0};
    EXPECT_THROW(generate_dataset(spec), QuotaShortfall);
}

TEST(Dataset, ExtractWithoutTagsIsUnlabeled) {
    const auto cap = simulate_capture(small_spec(true));
    ExtractOptions opts;
    opts.sample_interval_s = 5;
    const auto v = extract_vectors(cap.records, small_spec(true).device_set(), opts);
    ASSERT_FALSE(v.empty());
    for (const auto& fv : v) EXPECT_EQ(fv.label, features::Label::unlabeled);
    EXPECT_THROW(extract_vectors(cap.records, {}, opts, std::vector<std::uint8_t>(3)), std::invalid_argument);
}

TEST(Ledger, RoundTripAndErrors) {
    const std::vector<std::uint8_t> tags = {0, 1, 1, 0};
    EXPECT_EQ(write_ledger(tags), "iotgan-ledger 1 4\n0\n1\n1\n0\n");
    EXPECT_EQ(read_ledger(write_ledger(tags)), tags);
    EXPECT_THROW(read_ledger("nope 1 0\n"), ConfigError);
    EXPECT_THROW(read_ledger("iotgan-ledger 2 0\n"), ConfigError);
    EXPECT_THROW(read_ledger("iotgan-ledger 1 3\n0\n1\n"), ConfigError);
    EXPECT_THROW(read_ledger("iotgan-ledger 1 1\n7\n"), ConfigError);
}

TEST(Scenario, ParsesPinnedS1) {
    const auto s = load_scenario(IOTGAN_S1_SCENARIO);
    EXPECT_EQ(s.dataset.name, "S1");
    EXPECT_EQ(s.dataset.seed, 20190601u);
    EXPECT_EQ(s.dataset.devices.size(), 3u);
    EXPECT_EQ(s.dataset.quota.benign, 5000u);
    EXPECT_EQ(s.dataset.quota.malicious, 300u);
    EXPECT_DOUBLE_EQ(s.test_fraction, 0.2);
    ASSERT_TRUE(s.darknet.has_value());
    EXPECT_TRUE(s.darknet->devices.empty());
    EXPECT_FALSE(s.darknet->monitored.empty());
    const auto re = with_seed(s, 7);
    EXPECT_EQ(re.dataset.seed, 7u);
    EXPECT_NE(re.darknet->seed, s.darknet->seed);
}

TEST(Scenario, RejectsBadFiles) {
    EXPECT_THROW(parse_scenario("{"), ConfigError);
    EXPECT_THROW(parse_scenario(R"({"version": 2})"), ConfigError);
    EXPECT_THROW(parse_scenario(R"({"version": 1})"), ConfigError);
    EXPECT_THROW(parse_scenario(R"({"version": 1, "devices": [{"kind": "toaster", "ip": "1.2.3.4", "peers": ["1.1.1.1"]}]})"),
                 ConfigError);
    EXPECT_THROW(parse_scenario(R"({"version": 1, "monitored": ["1.2.3.4"],
                                     "attacks": [{"kind": "smurf", "source": "1.1.1.1", "target": "2.2.2.2"}]})"),
                 UnknownKind);
    EXPECT_THROW(parse_scenario(R"({"version": 1, "monitored": ["1.2.3.4"], "test_fraction": 1.0})"), ConfigError);
}

TEST(Scenario, S1QuotaIsMetExactly) {
    const auto s = load_scenario(IOTGAN_S1_SCENARIO);
    const auto ds = generate_dataset(s.dataset);
    std::size_t benign = 0, mal = 0;
    for (const auto& v : ds.vectors) (v.label == features::Label::malicious ? mal : benign)++;
    EXPECT_EQ(benign, 5000u);
    EXPECT_EQ(mal, 300u);
    const auto csv = features::write_feature_csv(ds.vectors);
    EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), 5301u);
}
