#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "sensorhub/errors.hpp"
#include "sensorhub/protocol.hpp"
#include "sensorhub/sensors.hpp"

namespace sensorhub {

// Electrical model of the emulated device. Sensor draw is a steady current
// at the supply voltage while enabled; CPU and radio costs scale with the
// sampling rate.
struct PowerProfile {
    std::array<double, kSensorCount> sensor_current_ma{};
    double supply_voltage_v = 3.7;
    double cpu_mj_per_sample = 1.0;
    double radio_mj_per_byte = 0.002;
    double radio_mj_per_packet = 5.0;

    static PowerProfile defaults() {
        PowerProfile p;
        p.sensor_current_ma = {
            0.20,  // accelerometer
            0.20,  // gravity
            0.20,  // gyroscope
            0.20,  // linear_acceleration
            4.20,  // rotation_vector
            4.00,  // magnetic_field
            4.20,  // orientation
            0.75,  // proximity
            0.75,  // temperature
            0.75,  // light
            0.75,  // pressure
            0.75,  // humidity
        };
        return p;
    }

    double current_ma(int sensor_index) const {
        sensor_by_index(sensor_index);  // validates the range
        return sensor_current_ma[static_cast<std::size_t>(sensor_index - 1)];
    }
};

// Summed draw of the enabled sensors, in mA.
inline double selection_current_ma(const PowerProfile& profile, const MetadataPacket& selection) {
    double total = 0.0;
    for (int i = 1; i <= kSensorCount; ++i) {
        if (selection.enabled(i)) total += profile.current_ma(i);
    }
    return total;
}

struct EnergyBreakdown {
    double sensor_mj_per_min = 0.0;
    double cpu_mj_per_min = 0.0;
    double network_mj_per_min = 0.0;

    double total_mj_per_min() const {
        return sensor_mj_per_min + cpu_mj_per_min + network_mj_per_min;
    }
};

// Energy per minute of streaming the selection at the given rate.
//
//   sensor  = sum(current_mA) * voltage_V * 60     (mA * V = mW; * s = mJ)
//   cpu     = cpu_mj_per_sample * 60 * hz
//   network = (packet_cost + byte_cost * payload_bytes) * 60 * hz
inline EnergyBreakdown energy_per_minute(const PowerProfile& profile,
                                         const MetadataPacket& selection, double hz) {
    if (hz <= 0) throw DomainError("sampling rate must be positive");
    if (!selection.any()) throw DomainError("no sensors selected");
    EnergyBreakdown out;
    out.sensor_mj_per_min = selection_current_ma(profile, selection) * profile.supply_voltage_v *
                            60.0;
    out.cpu_mj_per_min = profile.cpu_mj_per_sample * 60.0 * hz;
    const auto payload_bytes = static_cast<double>(expected_payload_bytes(selection));
    out.network_mj_per_min =
        (profile.radio_mj_per_packet + profile.radio_mj_per_byte * payload_bytes) * 60.0 * hz;
    return out;
}

// Draw of one sensor relative to another, e.g. how much more a fused
// position sensor costs than the accelerometer.
inline double current_ratio(const PowerProfile& profile, int numerator_index,
                            int denominator_index) {
    const double denominator = profile.current_ma(denominator_index);
    if (denominator == 0.0) {
        throw DomainError("reference sensor draws no current; ratio undefined");
    }
    return profile.current_ma(numerator_index) / denominator;
}

// Loads a profile from flat `key = value` lines. Keys are the canonical
// sensor names plus voltage, cpu_mj_per_sample, radio_mj_per_byte and
// radio_mj_per_packet; '#' starts a comment. Unlisted keys keep their
// defaults, so a file can override a single sensor.
inline PowerProfile parse_power_profile(std::istream& in) {
    PowerProfile profile = PowerProfile::defaults();
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const auto trim = [](std::string s) {
            const auto not_space = [](unsigned char c) { return !std::isspace(c); };
            s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
            s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
            return s;
        };
        const std::string text = trim(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("power profile line " + std::to_string(line_no) +
                              ": expected key = value");
        }
        const std::string key = trim(text.substr(0, eq));
        const std::string value_text = trim(text.substr(eq + 1));
        double value = 0.0;
        try {
            std::size_t used = 0;
            value = std::stod(value_text, &used);
            if (used != value_text.size()) throw std::invalid_argument(value_text);
        } catch (const std::exception&) {
            throw ConfigError("power profile line " + std::to_string(line_no) +
                              ": bad number '" + value_text + "'");
        }

        if (key == "voltage") {
            profile.supply_voltage_v = value;
        } else if (key == "cpu_mj_per_sample") {
            profile.cpu_mj_per_sample = value;
        } else if (key == "radio_mj_per_byte") {
            profile.radio_mj_per_byte = value;
        } else if (key == "radio_mj_per_packet") {
            profile.radio_mj_per_packet = value;
        } else if (const int index = sensor_index_by_name(key); index != 0) {
            profile.sensor_current_ma[static_cast<std::size_t>(index - 1)] = value;
        } else {
            throw ConfigError("power profile line " + std::to_string(line_no) +
                              ": unknown key '" + key + "'");
        }
    }
    return profile;
}

inline PowerProfile load_power_profile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open power profile: " + path.string());
    return parse_power_profile(in);
}

}  // namespace sensorhub
