#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace iotgan {

/// IPv4 address held in host byte order.
class Ipv4 {
public:
    constexpr Ipv4() = default;
    constexpr explicit Ipv4(std::uint32_t value) : value_(value) {}
    constexpr Ipv4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
        : value_((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d) {}

    constexpr std::uint32_t value() const { return value_; }

    /// Dotted-quad parser. Throws std::invalid_argument on anything else.
    static Ipv4 parse(std::string_view text) {
        std::uint32_t out = 0;
        int octets = 0;
        std::size_t i = 0;
        while (octets < 4) {
            if (i >= text.size() || text[i] < '0' || text[i] > '9')
                throw std::invalid_argument("bad IPv4 address: " + std::string(text));
            unsigned part = 0;
            std::size_t digits = 0;
            while (i < text.size() && text[i] >= '0' && text[i] <= '9' && digits < 4) {
                part = part * 10 + static_cast<unsigned>(text[i] - '0');
                ++i;
                ++digits;
            }
            if (part > 255 || digits > 3)
                throw std::invalid_argument("bad IPv4 address: " + std::string(text));
            out = (out << 8) | part;
            ++octets;
            if (octets < 4) {
                if (i >= text.size() || text[i] != '.')
                    throw std::invalid_argument("bad IPv4 address: " + std::string(text));
                ++i;
            }
        }
        if (i != text.size())
            throw std::invalid_argument("bad IPv4 address: " + std::string(text));
        return Ipv4(out);
    }

    std::string to_string() const {
        return std::to_string(value_ >> 24) + '.' + std::to_string((value_ >> 16) & 0xff) + '.' +
               std::to_string((value_ >> 8) & 0xff) + '.' + std::to_string(value_ & 0xff);
    }

    friend constexpr auto operator<=>(Ipv4, Ipv4) = default;

private:
    std::uint32_t value_ = 0;
};

enum class Protocol : std::uint8_t { tcp, udp, other };

/// TCP flag bits, using the on-wire bit positions of the flags byte.
namespace tcp_flag {
inline constexpr std::uint8_t fin = 0x01;
inline constexpr std::uint8_t syn = 0x02;
inline constexpr std::uint8_t rst = 0x04;
inline constexpr std::uint8_t psh = 0x08;
inline constexpr std::uint8_t ack = 0x10;
inline constexpr std::uint8_t urg = 0x20;
inline constexpr std::uint8_t all = 0x3f;
}  // namespace tcp_flag

/// One captured packet, normalized from its Ethernet/IPv4/L4 headers.
///
/// Ports are 0 and tcp_flags empty unless the protocol carries them.
struct PacketRecord {
    std::int64_t ts_micros = 0;
    Ipv4 src_ip;
    Ipv4 dst_ip;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    Protocol protocol = Protocol::other;
    std::uint8_t tcp_flags = 0;
    std::uint32_t frame_len = 0;

    bool has(std::uint8_t flag) const { return (tcp_flags & flag) != 0; }

    friend bool operator==(const PacketRecord&, const PacketRecord&) = default;
};

/// Checks the record-level invariants. Returns an empty string when valid.
inline std::string validate(const PacketRecord& p) {
    if (p.ts_micros < 0) return "negative timestamp";
    if (p.protocol == Protocol::other && (p.src_port != 0 || p.dst_port != 0))
        return "ports set on non-TCP/UDP record";
    if (p.protocol != Protocol::tcp && p.tcp_flags != 0) return "tcp flags on non-TCP record";
    if ((p.tcp_flags & ~tcp_flag::all) != 0) return "unknown tcp flag bits";
    return {};
}

inline const char* to_string(Protocol p) {
    switch (p) {
    case Protocol::tcp: return "tcp";
    case Protocol::udp: return "udp";
    case Protocol::other: return "other";
    }
    return "other";
}

}  // namespace iotgan
