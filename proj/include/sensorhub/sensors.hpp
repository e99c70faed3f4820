#pragma once

#include <array>
#include <string>
#include <string_view>

#include "sensorhub/errors.hpp"

namespace sensorhub {

enum class SensorKind { motion, position, environment };

// Static description of one of the twelve phone sensors every peer agrees on.
// `components` is the number of float readings one sample carries.
struct SensorDescriptor {
    int index;  // wire index, 1..12
    std::string_view name;
    SensorKind kind;
    int components;
    std::string_view unit;
};

inline constexpr int kSensorCount = 12;
inline constexpr int kTotalComponents = 27;

// Wire indices. The ordering is part of the protocol and never changes.
inline constexpr int kAccelerometer = 1;
inline constexpr int kGravity = 2;
inline constexpr int kGyroscope = 3;
inline constexpr int kLinearAcceleration = 4;
inline constexpr int kRotationVector = 5;
inline constexpr int kMagneticField = 6;
inline constexpr int kOrientation = 7;
inline constexpr int kProximity = 8;
inline constexpr int kTemperature = 9;
inline constexpr int kLight = 10;
inline constexpr int kPressure = 11;
inline constexpr int kHumidity = 12;

inline constexpr std::array<SensorDescriptor, kSensorCount> kSensorRegistry{{
    {kAccelerometer, "accelerometer", SensorKind::motion, 3, "m/s^2"},
    {kGravity, "gravity", SensorKind::motion, 3, "m/s^2"},
    {kGyroscope, "gyroscope", SensorKind::motion, 3, "rad/s"},
    {kLinearAcceleration, "linear_acceleration", SensorKind::motion, 3, "m/s^2"},
    {kRotationVector, "rotation_vector", SensorKind::motion, 4, "unitless"},
    {kMagneticField, "magnetic_field", SensorKind::position, 3, "uT"},
    {kOrientation, "orientation", SensorKind::position, 3, "deg"},
    {kProximity, "proximity", SensorKind::position, 1, "cm"},
    {kTemperature, "temperature", SensorKind::environment, 1, "degC"},
    {kLight, "light", SensorKind::environment, 1, "lux"},
    {kPressure, "pressure", SensorKind::environment, 1, "hPa"},
    {kHumidity, "humidity", SensorKind::environment, 1, "%"},
}};

inline const SensorDescriptor& sensor_by_index(int index) {
    if (index < 1 || index > kSensorCount) {
        throw DomainError("sensor index out of range: " + std::to_string(index));
    }
    return kSensorRegistry[static_cast<std::size_t>(index - 1)];
}

// Accepts canonical registry names plus the short spellings the CLI uses.
// Returns 0 when the name is unknown.
inline int sensor_index_by_name(std::string_view name) {
    for (const auto& d : kSensorRegistry) {
        if (d.name == name) {
            return d.index;
        }
    }
    if (name == "accel") return kAccelerometer;
    if (name == "gyro") return kGyroscope;
    if (name == "linacc" || name == "linear-acceleration") return kLinearAcceleration;
    if (name == "rotvec" || name == "rotation-vector") return kRotationVector;
    if (name == "mag" || name == "magnetic" || name == "magnetic-field") return kMagneticField;
    if (name == "prox") return kProximity;
    if (name == "temp") return kTemperature;
    return 0;
}

inline std::string_view to_string(SensorKind kind) {
    switch (kind) {
        case SensorKind::motion: return "motion";
        case SensorKind::position: return "position";
        case SensorKind::environment: return "environment";
    }
    return "?";
}

}  // namespace sensorhub
