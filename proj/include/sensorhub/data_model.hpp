#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sensorhub/errors.hpp"
#include "sensorhub/protocol.hpp"
#include "sensorhub/sensors.hpp"

namespace sensorhub {

enum class ValueType { float32 };

// One column of a virtual sensor's output.
struct DataField {
    std::string name;
    ValueType type = ValueType::float32;
    std::string unit;

    bool operator==(const DataField&) const = default;
};

// Ordered field list derived from a metadata packet. Immutable once built;
// building twice from the same packet yields an identical schema.
struct OutputSchema {
    MetadataPacket selection;
    std::vector<DataField> fields;

    bool operator==(const OutputSchema&) const = default;
};

using SchemaPtr = std::shared_ptr<const OutputSchema>;

// Fields appear in ascending sensor index order. Multi-component sensors get
// _x/_y/_z(/_scalar) suffixes; single-component sensors keep the bare name.
inline OutputSchema create_schema(const MetadataPacket& packet) {
    if (!packet.any()) {
        throw ValidationError("metadata packet enables no sensor");
    }
    static constexpr const char* kSuffixes[] = {"_x", "_y", "_z", "_scalar"};
    OutputSchema schema;
    schema.selection = packet;
    schema.fields.reserve(static_cast<std::size_t>(packet.component_count()));
    for (const auto& d : kSensorRegistry) {
        if (!packet.enabled(d.index)) continue;
        for (int c = 0; c < d.components; ++c) {
            DataField field;
            field.name = std::string(d.name);
            if (d.components > 1) field.name += kSuffixes[c];
            field.unit = std::string(d.unit);
            schema.fields.push_back(std::move(field));
        }
    }
    return schema;
}

inline SchemaPtr make_schema(const MetadataPacket& packet) {
    return std::make_shared<const OutputSchema>(create_schema(packet));
}

// One timestamped tuple conforming to a schema. The timestamp is assigned at
// server arrival; the wire carries no time.
struct StreamElement {
    std::int64_t timestamp_ms = 0;
    std::string source_id;
    SchemaPtr schema;
    std::vector<float> values;
};

inline StreamElement map_sensor_data(SchemaPtr schema, const ReadingGroups& groups,
                                     std::string source_id, std::int64_t timestamp_ms) {
    StreamElement element;
    element.timestamp_ms = timestamp_ms;
    element.source_id = std::move(source_id);
    element.schema = std::move(schema);
    element.values.reserve(element.schema->fields.size());
    std::size_t g = 0;
    for (const auto& d : kSensorRegistry) {
        if (!element.schema->selection.enabled(d.index)) continue;
        if (g >= groups.size() || groups[g].size() != static_cast<std::size_t>(d.components)) {
            throw ValidationError("reading groups do not conform to the schema selection");
        }
        element.values.insert(element.values.end(), groups[g].begin(), groups[g].end());
        ++g;
    }
    if (g != groups.size()) {
        throw ValidationError("reading groups do not conform to the schema selection");
    }
    return element;
}

}  // namespace sensorhub
