#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sensorhub/errors.hpp"
#include "sensorhub/repository.hpp"
#include "sensorhub/storage.hpp"
#include "sensorhub/vsd.hpp"

namespace sensorhub {

// A live virtual sensor: its definition, its storage, and the repository
// registrations feeding it. Immutable after load; the buffer and CSV sink
// are internally synchronized.
struct VirtualSensor {
    VirtualSensorDefinition def;
    std::shared_ptr<StreamBuffer> buffer;
    std::shared_ptr<CsvSink> csv;

    struct SourceRegistration {
        WrapperConnectionRequest wcr;
        std::uint64_t id;
    };
    std::vector<SourceRegistration> registrations;
};

// Owns the set of loaded virtual sensors. A load either completes fully or
// leaves no trace: when any stream source reports unavailable, registrations
// made so far are rolled back before the error is raised.
class VirtualSensorHost {
public:
    explicit VirtualSensorHost(WrapperRepository& repository,
                               std::optional<std::filesystem::path> data_dir = {})
        : repository_(repository), data_dir_(std::move(data_dir)) {}

    ~VirtualSensorHost() { unload_all(); }

    void load(const VirtualSensorDefinition& def) {
        {
            std::lock_guard lock(mutex_);
            if (sensors_.count(def.name)) {
                throw LoadError("virtual sensor '" + def.name + "' is already loaded");
            }
        }
        auto sensor = std::make_shared<VirtualSensor>();
        sensor->def = def;
        sensor->buffer = std::make_shared<StreamBuffer>(def.history_size);
        if (data_dir_) {
            sensor->csv = std::make_shared<CsvSink>(*data_dir_ / (def.name + ".csv"));
        }

        auto buffer = sensor->buffer;
        auto csv = sensor->csv;
        StreamSourceRegistration registration{
            def.name, [buffer, csv](const StreamElement& element) {
                buffer->append(element);
                if (csv) csv->append(element);
            }};

        for (const auto& wcr : def.sources) {
            const auto result = repository_.acquire(wcr, registration);
            if (result.outcome == WrapperRepository::Outcome::unavailable) {
                rollback(*sensor);
                throw LoadError("virtual sensor '" + def.name + "': no wrapper available for '" +
                                wcr.describe() + "'");
            }
            sensor->registrations.push_back({wcr, result.registration_id});
        }

        std::lock_guard lock(mutex_);
        if (sensors_.count(def.name)) {
            // Lost a load race on the same name; undo this attempt.
            rollback(*sensor);
            throw LoadError("virtual sensor '" + def.name + "' is already loaded");
        }
        sensors_.emplace(def.name, std::move(sensor));
    }

    std::shared_ptr<const VirtualSensor> find(const std::string& name) const {
        std::lock_guard lock(mutex_);
        const auto it = sensors_.find(name);
        return it == sensors_.end() ? nullptr : it->second;
    }

    std::vector<std::string> names() const {
        std::lock_guard lock(mutex_);
        std::vector<std::string> out;
        out.reserve(sensors_.size());
        for (const auto& [name, sensor] : sensors_) out.push_back(name);
        return out;
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return sensors_.size();
    }

    void unload(const std::string& name) {
        std::shared_ptr<VirtualSensor> sensor;
        {
            std::lock_guard lock(mutex_);
            const auto it = sensors_.find(name);
            if (it == sensors_.end()) return;
            sensor = it->second;
            sensors_.erase(it);
        }
        rollback(*sensor);
    }

    void unload_all() {
        std::map<std::string, std::shared_ptr<VirtualSensor>> taken;
        {
            std::lock_guard lock(mutex_);
            taken.swap(sensors_);
        }
        for (auto& [name, sensor] : taken) rollback(*sensor);
    }

private:
    void rollback(VirtualSensor& sensor) {
        for (auto it = sensor.registrations.rbegin(); it != sensor.registrations.rend(); ++it) {
            repository_.release(it->wcr, it->id);
        }
        sensor.registrations.clear();
    }

    WrapperRepository& repository_;
    std::optional<std::filesystem::path> data_dir_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<VirtualSensor>> sensors_;
};

}  // namespace sensorhub
