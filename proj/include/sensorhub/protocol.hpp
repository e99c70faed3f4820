#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "sensorhub/errors.hpp"
#include "sensorhub/sensors.hpp"

// Wire format (see docs/wire-format.md for the normative write-up):
//
//   metadata packet   2 bytes, a big-endian 16-bit word. Bit k (k = 0 is the
//                     least significant bit) carries the enable flag for
//                     sensor index k+1. Bits 12..15 are zero on the wire and
//                     rejected when set.
//   sensor data packet  One IEEE-754 binary32 per reading component, big
//                     endian, concatenated in ascending sensor index order
//                     over the enabled sensors. No header, no timestamp; the
//                     frame length is fully determined by the metadata.

namespace sensorhub {

// The twelve-flag handshake. flags[i] corresponds to sensor index i+1.
struct MetadataPacket {
    std::array<bool, kSensorCount> flags{};

    bool enabled(int index) const { return flags[checked(index)]; }
    void set(int index, bool on = true) { flags[checked(index)] = on; }

    bool any() const {
        for (bool f : flags) {
            if (f) return true;
        }
        return false;
    }

    int enabled_count() const {
        int n = 0;
        for (bool f : flags) n += f ? 1 : 0;
        return n;
    }

    // Total float readings one data frame carries under this selection.
    int component_count() const {
        int n = 0;
        for (const auto& d : kSensorRegistry) {
            if (flags[static_cast<std::size_t>(d.index - 1)]) n += d.components;
        }
        return n;
    }

    static MetadataPacket all_enabled() {
        MetadataPacket p;
        p.flags.fill(true);
        return p;
    }

    static MetadataPacket from_indices(std::initializer_list<int> indices) {
        MetadataPacket p;
        for (int i : indices) p.set(i);
        return p;
    }

    bool operator==(const MetadataPacket&) const = default;

private:
    static std::size_t checked(int index) {
        if (index < 1 || index > kSensorCount) {
            throw DomainError("sensor index out of range: " + std::to_string(index));
        }
        return static_cast<std::size_t>(index - 1);
    }
};

// One float group per enabled sensor, ascending sensor index.
using ReadingGroups = std::vector<std::vector<float>>;

inline constexpr std::size_t kMetadataWireSize = 2;
inline constexpr std::size_t kMinPayloadBytes = 4;
inline constexpr std::size_t kMaxPayloadBytes = 108;

inline std::array<std::uint8_t, kMetadataWireSize> encode_metadata(const MetadataPacket& packet) {
    if (!packet.any()) {
        throw ValidationError("metadata packet enables no sensor");
    }
    std::uint16_t word = 0;
    for (int k = 0; k < kSensorCount; ++k) {
        if (packet.flags[static_cast<std::size_t>(k)]) {
            word = static_cast<std::uint16_t>(word | (1u << k));
        }
    }
    return {static_cast<std::uint8_t>(word >> 8), static_cast<std::uint8_t>(word & 0xFF)};
}

inline MetadataPacket decode_metadata(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != kMetadataWireSize) {
        throw FramingError("metadata packet needs exactly 2 bytes, got " +
                           std::to_string(bytes.size()));
    }
    const auto word = static_cast<std::uint16_t>((bytes[0] << 8) | bytes[1]);
    if (word & 0xF000) {
        throw MalformedPacketError("metadata padding bits 12..15 must be zero");
    }
    if (word == 0) {
        throw ValidationError("metadata packet enables no sensor");
    }
    MetadataPacket packet;
    for (int k = 0; k < kSensorCount; ++k) {
        packet.flags[static_cast<std::size_t>(k)] = (word >> k) & 1u;
    }
    return packet;
}

// Data-frame length in bytes for this selection; always in [4, 108].
inline std::size_t expected_payload_bytes(const MetadataPacket& packet) {
    if (!packet.any()) {
        throw ValidationError("metadata packet enables no sensor");
    }
    return sizeof(float) * static_cast<std::size_t>(packet.component_count());
}

namespace detail {

inline void put_float_be(std::vector<std::uint8_t>& out, float value) {
    const auto bits = std::bit_cast<std::uint32_t>(value);
    out.push_back(static_cast<std::uint8_t>(bits >> 24));
    out.push_back(static_cast<std::uint8_t>(bits >> 16));
    out.push_back(static_cast<std::uint8_t>(bits >> 8));
    out.push_back(static_cast<std::uint8_t>(bits));
}

inline float get_float_be(const std::uint8_t* p) {
    const std::uint32_t bits = (static_cast<std::uint32_t>(p[0]) << 24) |
                               (static_cast<std::uint32_t>(p[1]) << 16) |
                               (static_cast<std::uint32_t>(p[2]) << 8) |
                               static_cast<std::uint32_t>(p[3]);
    return std::bit_cast<float>(bits);
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_readings(const MetadataPacket& packet,
                                                 const ReadingGroups& groups) {
    std::size_t expected_groups = 0;
    for (const auto& d : kSensorRegistry) {
        if (packet.enabled(d.index)) ++expected_groups;
    }
    if (groups.size() != expected_groups) {
        throw ValidationError("expected " + std::to_string(expected_groups) +
                              " reading groups, got " + std::to_string(groups.size()));
    }
    std::vector<std::uint8_t> out;
    out.reserve(expected_payload_bytes(packet));
    std::size_t g = 0;
    for (const auto& d : kSensorRegistry) {
        if (!packet.enabled(d.index)) continue;
        const auto& group = groups[g++];
        if (group.size() != static_cast<std::size_t>(d.components)) {
            throw ValidationError(std::string(d.name) + " expects " +
                                  std::to_string(d.components) + " values, got " +
                                  std::to_string(group.size()));
        }
        for (float v : group) {
            detail::put_float_be(out, v);
        }
    }
    return out;
}

inline ReadingGroups decode_readings(const MetadataPacket& packet,
                                     std::span<const std::uint8_t> bytes) {
    if (bytes.size() != expected_payload_bytes(packet)) {
        throw FramingError("data frame must be " +
                           std::to_string(expected_payload_bytes(packet)) + " bytes, got " +
                           std::to_string(bytes.size()));
    }
    ReadingGroups groups;
    groups.reserve(static_cast<std::size_t>(packet.enabled_count()));
    const std::uint8_t* p = bytes.data();
    for (const auto& d : kSensorRegistry) {
        if (!packet.enabled(d.index)) continue;
        std::vector<float> group(static_cast<std::size_t>(d.components));
        for (auto& v : group) {
            v = detail::get_float_be(p);
            p += sizeof(float);
        }
        groups.push_back(std::move(group));
    }
    return groups;
}

}  // namespace sensorhub
