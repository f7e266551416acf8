#pragma once

// Classic libpcap capture files (not pcapng), Ethernet link type only.

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "iotgan/packet.hpp"

namespace iotgan::pcap {

enum class Endian { little, big };
enum class TsResolution { micro, nano };

inline constexpr std::uint32_t magic_micro = 0xa1b2c3d4;
inline constexpr std::uint32_t magic_nano = 0xa1b23c4d;
inline constexpr std::uint32_t link_ethernet = 1;
inline constexpr std::size_t global_header_len = 24;
inline constexpr std::size_t record_header_len = 16;

struct CaptureMeta {
    Endian endianness = Endian::little;
    TsResolution ts_resolution = TsResolution::micro;
    std::uint32_t link_type = link_ethernet;

    friend bool operator==(const CaptureMeta&, const CaptureMeta&) = default;
};

struct Capture {
    CaptureMeta meta;
    std::vector<PacketRecord> records;
};

class PcapError : public std::runtime_error {
public:
    enum class Kind { unknown_magic, truncated_header, truncated_record, unsupported_link_type, frame_too_short };

    PcapError(Kind kind, std::size_t offset, const std::string& what, std::vector<PacketRecord> partial = {})
        : std::runtime_error(what + " at offset " + std::to_string(offset)),
          kind_(kind),
          offset_(offset),
          partial_(std::move(partial)) {}

    Kind kind() const { return kind_; }
    std::size_t offset() const { return offset_; }
    /// Records decoded before a truncated trailing record was hit.
    const std::vector<PacketRecord>& partial() const { return partial_; }

private:
    Kind kind_;
    std::size_t offset_;
    std::vector<PacketRecord> partial_;
};

namespace detail {

inline std::uint16_t be16(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint16_t>((b[at] << 8) | b[at + 1]);
}

inline std::uint32_t be32(std::span<const std::uint8_t> b, std::size_t at) {
    return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
           std::uint32_t{b[at + 3]};
}

inline std::uint32_t read32(std::span<const std::uint8_t> b, std::size_t at, Endian e) {
    if (e == Endian::big) return be32(b, at);
    return std::uint32_t{b[at]} | (std::uint32_t{b[at + 1]} << 8) | (std::uint32_t{b[at + 2]} << 16) |
           (std::uint32_t{b[at + 3]} << 24);
}

inline std::uint16_t read16(std::span<const std::uint8_t> b, std::size_t at, Endian e) {
    if (e == Endian::big) return be16(b, at);
    return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

inline void put32(std::vector<std::uint8_t>& out, std::uint32_t v, Endian e) {
    if (e == Endian::big) {
        for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
    } else {
        for (int s = 0; s <= 24; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
    }
}

inline void put16(std::vector<std::uint8_t>& out, std::uint16_t v, Endian e) {
    if (e == Endian::big) {
        out.push_back(static_cast<std::uint8_t>(v >> 8));
        out.push_back(static_cast<std::uint8_t>(v));
    } else {
        out.push_back(static_cast<std::uint8_t>(v));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
    }
}

inline void set_be16(std::uint8_t* p, std::uint16_t v) {
    p[0] = static_cast<std::uint8_t>(v >> 8);
    p[1] = static_cast<std::uint8_t>(v);
}

inline void set_be32(std::uint8_t* p, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (24 - 8 * i));
}

inline std::uint16_t ipv4_checksum(const std::uint8_t* header, std::size_t len) {
    std::uint32_t sum = 0;
    for (std::size_t i = 0; i + 1 < len; i += 2) sum += static_cast<std::uint32_t>((header[i] << 8) | header[i + 1]);
    while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
    return static_cast<std::uint16_t>(~sum);
}

inline constexpr std::size_t eth_len = 14;
inline constexpr std::size_t ipv4_min_len = 20;
inline constexpr std::size_t tcp_min_len = 20;
inline constexpr std::size_t udp_len = 8;

/// Smallest frame able to carry every field of the record.
inline std::size_t min_frame_len(Protocol p) {
    switch (p) {
    case Protocol::tcp: return eth_len + ipv4_min_len + tcp_min_len;
    case Protocol::udp: return eth_len + ipv4_min_len + udp_len;
    case Protocol::other: return eth_len + ipv4_min_len;
    }
    return eth_len + ipv4_min_len;
}

}  // namespace detail

/// Decodes one Ethernet II frame. Non-IPv4 or non-TCP/UDP payloads come back as
/// Protocol::other; IPv4 addresses are kept whenever the IPv4 header is valid.
inline PacketRecord decode_frame(std::span<const std::uint8_t> frame, std::int64_t ts_micros) {
    using namespace detail;
    if (frame.size() < eth_len)
        throw PcapError(PcapError::Kind::frame_too_short, frame.size(), "frame shorter than Ethernet header");

    PacketRecord rec;
    rec.ts_micros = ts_micros;
    rec.frame_len = static_cast<std::uint32_t>(frame.size());

    if (be16(frame, 12) != 0x0800) return rec;
    if (frame.size() < eth_len + ipv4_min_len) return rec;

    const std::size_t ip = eth_len;
    const unsigned version = frame[ip] >> 4;
    const std::size_t ihl = static_cast<std::size_t>(frame[ip] & 0x0f) * 4;
    if (version != 4 || ihl < ipv4_min_len || frame.size() < ip + ihl) return rec;

    rec.src_ip = Ipv4(be32(frame, ip + 12));
    rec.dst_ip = Ipv4(be32(frame, ip + 16));

    // Non-first fragments carry no transport header.
    if ((be16(frame, ip + 6) & 0x1fff) != 0) return rec;

    const std::uint8_t proto = frame[ip + 9];
    const std::size_t l4 = ip + ihl;
    if (proto == 6 && frame.size() >= l4 + tcp_min_len) {
        rec.protocol = Protocol::tcp;
        rec.src_port = be16(frame, l4);
        rec.dst_port = be16(frame, l4 + 2);
        rec.tcp_flags = frame[l4 + 13] & tcp_flag::all;
    } else if (proto == 17 && frame.size() >= l4 + udp_len) {
        rec.protocol = Protocol::udp;
        rec.src_port = be16(frame, l4);
        rec.dst_port = be16(frame, l4 + 2);
    }
    return rec;
}

/// Parses a whole capture held in memory.
///
/// A truncated trailing record raises PcapError::Kind::truncated_record with
/// every fully read record attached (see PcapError::partial()).
inline Capture parse_pcap(std::span<const std::uint8_t> bytes) {
    using namespace detail;
    if (bytes.size() < global_header_len)
        throw PcapError(PcapError::Kind::truncated_header, bytes.size(), "pcap global header needs 24 bytes");

    Capture cap;
    const std::uint32_t magic_le = read32(bytes, 0, Endian::little);
    const std::uint32_t magic_be = read32(bytes, 0, Endian::big);
    if (magic_le == magic_micro || magic_le == magic_nano) {
        cap.meta.endianness = Endian::little;
        cap.meta.ts_resolution = magic_le == magic_nano ? TsResolution::nano : TsResolution::micro;
    } else if (magic_be == magic_micro || magic_be == magic_nano) {
        cap.meta.endianness = Endian::big;
        cap.meta.ts_resolution = magic_be == magic_nano ? TsResolution::nano : TsResolution::micro;
    } else {
        throw PcapError(PcapError::Kind::unknown_magic, 0, "unknown pcap magic");
    }
    const Endian e = cap.meta.endianness;
    cap.meta.link_type = read32(bytes, 20, e);
    if (cap.meta.link_type != link_ethernet)
        throw PcapError(PcapError::Kind::unsupported_link_type, 20,
                        "unsupported link type " + std::to_string(cap.meta.link_type));

    std::size_t at = global_header_len;
    while (at < bytes.size()) {
        if (bytes.size() - at < record_header_len)
            throw PcapError(PcapError::Kind::truncated_record, at, "truncated record header",
                            std::move(cap.records));
        const std::int64_t ts_sec = read32(bytes, at, e);
        const std::int64_t ts_frac = read32(bytes, at + 4, e);
        const std::uint32_t incl_len = read32(bytes, at + 8, e);
        const std::uint32_t orig_len = read32(bytes, at + 12, e);
        if (bytes.size() - at - record_header_len < incl_len)
            throw PcapError(PcapError::Kind::truncated_record, at, "truncated record data", std::move(cap.records));

        const std::int64_t micros =
            cap.meta.ts_resolution == TsResolution::nano ? ts_frac / 1000 : ts_frac;
        const auto frame = bytes.subspan(at + record_header_len, incl_len);
        PacketRecord rec;
        if (frame.size() >= eth_len) {
            rec = decode_frame(frame, ts_sec * 1'000'000 + micros);
        } else {
            rec.ts_micros = ts_sec * 1'000'000 + micros;
        }
        rec.frame_len = orig_len;
        cap.records.push_back(rec);
        at += record_header_len + incl_len;
    }
    return cap;
}

struct WriteOptions {
    Endian endianness = Endian::little;
    TsResolution ts_resolution = TsResolution::micro;
};

/// Builds the frame bytes for a record: Ethernet II, IPv4 without options and
/// a bare TCP or UDP header, zero payload. Records whose frame_len is below the
/// header size get a frame of the minimal header size.
inline std::vector<std::uint8_t> synthesize_frame(const PacketRecord& rec) {
    using namespace detail;
    const std::size_t size = std::max<std::size_t>(rec.frame_len, min_frame_len(rec.protocol));
    std::vector<std::uint8_t> f(size, 0);

    static constexpr std::array<std::uint8_t, 12> macs = {0x02, 0, 0, 0, 0, 0x02, 0x02, 0, 0, 0, 0, 0x01};
    std::copy(macs.begin(), macs.end(), f.begin());
    set_be16(&f[12], 0x0800);

    std::uint8_t* ip = &f[eth_len];
    ip[0] = 0x45;
    set_be16(ip + 2, static_cast<std::uint16_t>(std::min<std::size_t>(size - eth_len, 0xffff)));
    set_be16(ip + 6, 0x4000);
    ip[8] = 64;
    ip[9] = rec.protocol == Protocol::tcp ? 6 : rec.protocol == Protocol::udp ? 17 : 1;
    set_be32(ip + 12, rec.src_ip.value());
    set_be32(ip + 16, rec.dst_ip.value());
    set_be16(ip + 10, ipv4_checksum(ip, ipv4_min_len));

    std::uint8_t* l4 = ip + ipv4_min_len;
    if (rec.protocol == Protocol::tcp) {
        set_be16(l4, rec.src_port);
        set_be16(l4 + 2, rec.dst_port);
        l4[12] = 5 << 4;
        l4[13] = rec.tcp_flags & tcp_flag::all;
        set_be16(l4 + 14, 0xffff);
    } else if (rec.protocol == Protocol::udp) {
        set_be16(l4, rec.src_port);
        set_be16(l4 + 2, rec.dst_port);
        set_be16(l4 + 4, static_cast<std::uint16_t>(std::min<std::size_t>(size - eth_len - ipv4_min_len, 0xffff)));
    }
    return f;
}

/// Serializes records as a classic pcap, link type Ethernet.
/// Timestamps must fit the 32-bit seconds field.
inline std::vector<std::uint8_t> write_pcap(std::span<const PacketRecord> records, WriteOptions opts = {}) {
    using namespace detail;
    const Endian e = opts.endianness;
    std::vector<std::uint8_t> out;
    out.reserve(global_header_len + records.size() * (record_header_len + 128));

    put32(out, opts.ts_resolution == TsResolution::nano ? magic_nano : magic_micro, e);
    put16(out, 2, e);
    put16(out, 4, e);
    put32(out, 0, e);  // thiszone
    put32(out, 0, e);  // sigfigs
    put32(out, 65535, e);
    put32(out, link_ethernet, e);

    for (const auto& rec : records) {
        if (rec.ts_micros < 0 || rec.ts_micros / 1'000'000 > std::numeric_limits<std::uint32_t>::max())
            throw std::out_of_range("timestamp outside the pcap 32-bit seconds range");
        const auto frame = synthesize_frame(rec);
        const auto frac = static_cast<std::uint32_t>(rec.ts_micros % 1'000'000);
        put32(out, static_cast<std::uint32_t>(rec.ts_micros / 1'000'000), e);
        put32(out, opts.ts_resolution == TsResolution::nano ? frac * 1000 : frac, e);
        put32(out, static_cast<std::uint32_t>(frame.size()), e);
        put32(out, rec.frame_len, e);
        out.insert(out.end(), frame.begin(), frame.end());
    }
    return out;
}

}  // namespace iotgan::pcap
