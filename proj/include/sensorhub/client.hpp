#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sensorhub/errors.hpp"
#include "sensorhub/net.hpp"
#include "sensorhub/protocol.hpp"
#include "sensorhub/sensors.hpp"

namespace sensorhub {

// Synthetic signal source for the emulated device. One spec drives every
// enabled component; component j gets a small phase offset so channels are
// distinguishable in stored data.
struct GeneratorSpec {
    enum class Kind { constant, sine, noise, replay };

    Kind kind = Kind::sine;
    double value = 0.0;       // constant
    double amplitude = 1.0;   // sine
    double period_secs = 2.0; // sine
    double low = 0.0;         // noise
    double high = 1.0;        // noise
    std::filesystem::path replay_path;

    // Accepts constant:V | sine:AMP:PERIOD | noise:LO:HI | replay:PATH.
    static GeneratorSpec parse(const std::string& text) {
        std::vector<std::string> parts;
        std::string part;
        std::istringstream in(text);
        while (std::getline(in, part, ':')) parts.push_back(part);
        if (parts.empty()) throw ConfigError("empty generator spec");

        const auto number = [&](std::size_t i, const char* what) {
            try {
                std::size_t used = 0;
                const double v = std::stod(parts.at(i), &used);
                if (used != parts.at(i).size()) throw std::invalid_argument(what);
                return v;
            } catch (const std::exception&) {
                throw ConfigError("generator spec '" + text + "': bad " + what);
            }
        };

        GeneratorSpec spec;
        if (parts[0] == "constant") {
            if (parts.size() != 2) throw ConfigError("constant generator wants constant:VALUE");
            spec.kind = Kind::constant;
            spec.value = number(1, "value");
        } else if (parts[0] == "sine") {
            if (parts.size() != 3) {
                throw ConfigError("sine generator wants sine:AMPLITUDE:PERIOD_SECS");
            }
            spec.kind = Kind::sine;
            spec.amplitude = number(1, "amplitude");
            spec.period_secs = number(2, "period");
            if (spec.period_secs <= 0) {
                throw ConfigError("sine generator: period must be positive");
            }
        } else if (parts[0] == "noise") {
            if (parts.size() != 3) throw ConfigError("noise generator wants noise:LOW:HIGH");
            spec.kind = Kind::noise;
            spec.low = number(1, "low bound");
            spec.high = number(2, "high bound");
            if (spec.high < spec.low) throw ConfigError("noise generator: high < low");
        } else if (parts[0] == "replay") {
            if (parts.size() < 2) throw ConfigError("replay generator wants replay:PATH");
            spec.kind = Kind::replay;
            // Re-join so paths containing ':' survive.
            std::string path = parts[1];
            for (std::size_t i = 2; i < parts.size(); ++i) path += ':' + parts[i];
            spec.replay_path = path;
        } else {
            throw ConfigError("unknown generator kind '" + parts[0] + "'");
        }
        return spec;
    }
};

// The set of sensors an emulated device is fitted with.
struct DeviceProfile {
    MetadataPacket fitted;

    static DeviceProfile all() {
        DeviceProfile p;
        for (int i = 1; i <= kSensorCount; ++i) p.fitted.set(i, true);
        return p;
    }

    // Comma-separated sensor names, canonical or alias.
    static DeviceProfile parse(const std::string& csv) {
        if (csv == "all") return all();
        DeviceProfile p;
        std::istringstream in(csv);
        std::string token;
        while (std::getline(in, token, ',')) {
            if (token.empty()) continue;
            const int index = sensor_index_by_name(token);
            if (index == 0) throw ConfigError("unknown sensor '" + token + "' in profile");
            p.fitted.set(index, true);
        }
        if (!p.fitted.any()) throw ConfigError("device profile lists no sensors");
        return p;
    }
};

inline MetadataPacket parse_sensor_list(const std::string& csv) {
    MetadataPacket selection;
    std::istringstream in(csv);
    std::string token;
    while (std::getline(in, token, ',')) {
        if (token.empty()) continue;
        const int index = sensor_index_by_name(token);
        if (index == 0) throw ConfigError("unknown sensor '" + token + "'");
        selection.set(index, true);
    }
    if (!selection.any()) throw ConfigError("no sensors selected");
    return selection;
}

// First phase of a session: checks the requested selection against what the
// device actually carries. The session only proceeds when every requested
// sensor is fitted.
inline MetadataPacket identify_supported_sensors(const DeviceProfile& profile,
                                                 const MetadataPacket& requested) {
    if (!requested.any()) throw ConfigError("no sensors selected");
    std::vector<std::string> missing;
    for (int i = 1; i <= kSensorCount; ++i) {
        if (requested.enabled(i) && !profile.fitted.enabled(i)) {
            missing.push_back(std::string(sensor_by_index(i).name));
        }
    }
    if (!missing.empty()) {
        std::string joined;
        for (const auto& name : missing) {
            if (!joined.empty()) joined += ", ";
            joined += name;
        }
        throw ConfigError("device does not carry: " + joined);
    }
    return requested;
}

struct SimulationConfig {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
    MetadataPacket selection;
    double hz = 1.0;
    std::optional<std::uint64_t> count;  // frames; exactly one of count/secs
    std::optional<double> secs;
    GeneratorSpec generator;
    std::uint32_t seed = 0;
    const std::atomic<bool>* cancel = nullptr;
    // Test tap: observes each frame's values exactly as sent.
    std::function<void(std::uint64_t, const ReadingGroups&)> on_frame;
};

struct SessionReport {
    std::uint64_t packets_sent = 0;
    std::uint64_t bytes_sent = 0;
    double elapsed_secs = 0.0;
    double mean_hz = 0.0;
    bool completed = false;
    std::string error;
};

namespace detail {

class SampleSource {
public:
    SampleSource(const GeneratorSpec& spec, std::size_t components, std::uint32_t seed)
        : spec_(spec), components_(components), rng_(seed) {
        if (spec_.kind == GeneratorSpec::Kind::replay) {
            load_replay();
        }
    }

    // Values for frame k at nominal time t = k / hz.
    std::vector<float> frame(std::uint64_t k, double hz) {
        std::vector<float> out(components_);
        switch (spec_.kind) {
            case GeneratorSpec::Kind::constant:
                for (auto& v : out) v = static_cast<float>(spec_.value);
                break;
            case GeneratorSpec::Kind::sine: {
                const double t = static_cast<double>(k) / hz;
                for (std::size_t j = 0; j < components_; ++j) {
                    const double phase = 2.0 * std::numbers::pi * t / spec_.period_secs +
                                         0.1 * static_cast<double>(j);
                    out[j] = static_cast<float>(spec_.amplitude * std::sin(phase));
                }
                break;
            }
            case GeneratorSpec::Kind::noise:
                for (auto& v : out) v = static_cast<float>(spec_.low + (spec_.high - spec_.low) *
                                                                           next_unit());
                break;
            case GeneratorSpec::Kind::replay: {
                const auto& row = rows_[k % rows_.size()];
                for (std::size_t j = 0; j < components_; ++j) out[j] = row[j];
                break;
            }
        }
        return out;
    }

private:
    // Uniform in [0, 1) built from the top 24 bits so the mapping is exact
    // in double and identical across platforms.
    double next_unit() {
        return static_cast<double>(rng_() >> 8) / static_cast<double>(1u << 24);
    }

    void load_replay() {
        std::ifstream in(spec_.replay_path);
        if (!in) {
            throw ConfigError("cannot open replay file: " + spec_.replay_path.string());
        }
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::vector<float> row;
            std::istringstream fields(line);
            std::string cell;
            bool numeric = true;
            while (std::getline(fields, cell, ',')) {
                try {
                    row.push_back(std::stof(cell));
                } catch (const std::exception&) {
                    numeric = false;
                    break;
                }
            }
            if (!numeric) {
                if (first) {
                    first = false;
                    continue;  // header row
                }
                throw ConfigError("replay file has a non-numeric row: " + line);
            }
            first = false;
            if (row.size() < components_) {
                throw ConfigError("replay row has " + std::to_string(row.size()) +
                                  " columns; need at least " + std::to_string(components_));
            }
            rows_.push_back(std::move(row));
        }
        if (rows_.empty()) throw ConfigError("replay file has no data rows");
    }

    GeneratorSpec spec_;
    std::size_t components_;
    std::mt19937 rng_;
    std::vector<std::vector<float>> rows_;
};

inline ReadingGroups group_frame(const MetadataPacket& selection, const std::vector<float>& flat) {
    ReadingGroups groups;
    std::size_t at = 0;
    for (int i = 1; i <= kSensorCount; ++i) {
        if (!selection.enabled(i)) continue;
        const auto& descriptor = sensor_by_index(i);
        groups.emplace_back(flat.begin() + at, flat.begin() + at + descriptor.components);
        at += descriptor.components;
    }
    return groups;
}

}  // namespace detail

// Runs one emulated device session: connect, send the metadata word, then
// stream frames at the configured rate on an absolute-deadline schedule so
// the mean rate does not drift with per-frame jitter.
inline SessionReport run_client(const SimulationConfig& config) {
    using clock = std::chrono::steady_clock;
    SessionReport report;

    if (config.hz <= 0) throw ConfigError("rate must be positive");
    if (config.count.has_value() == config.secs.has_value()) {
        throw ConfigError("exactly one of count/secs must be given");
    }
    if (!config.selection.any()) throw ConfigError("no sensors selected");

    const std::uint64_t total_frames =
        config.count ? *config.count
                     : static_cast<std::uint64_t>(std::ceil(*config.secs * config.hz));
    const std::size_t components = config.selection.component_count();
    detail::SampleSource source(config.generator, components, config.seed);

    net::TcpStream stream;
    try {
        stream = net::TcpStream::connect(config.host, config.port);
        const auto header = encode_metadata(config.selection);
        stream.write_all(header);
        report.bytes_sent += header.size();
    } catch (const net::SocketError& e) {
        report.error = e.what();
        return report;
    }

    const auto start = clock::now();
    const auto frame_interval = std::chrono::duration<double>(1.0 / config.hz);
    for (std::uint64_t k = 0; k < total_frames; ++k) {
        if (config.cancel && config.cancel->load()) break;
        std::this_thread::sleep_until(start + frame_interval * static_cast<double>(k));
        if (config.cancel && config.cancel->load()) break;

        const auto groups = detail::group_frame(config.selection, source.frame(k, config.hz));
        const auto payload = encode_readings(config.selection, groups);
        try {
            stream.write_all(payload);
        } catch (const net::SocketError& e) {
            report.error = e.what();
            break;
        }
        report.bytes_sent += payload.size();
        ++report.packets_sent;
        if (config.on_frame) config.on_frame(k, groups);
    }

    const auto elapsed = std::chrono::duration<double>(clock::now() - start).count();
    report.elapsed_secs = elapsed;
    report.mean_hz = report.packets_sent / std::max(elapsed, 1e-9);
    report.completed = report.error.empty() && report.packets_sent == total_frames;
    stream.shutdown_both();
    stream.close();
    return report;
}

}  // namespace sensorhub
