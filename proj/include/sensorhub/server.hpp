#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sensorhub/android_wrapper.hpp"
#include "sensorhub/errors.hpp"
#include "sensorhub/log.hpp"
#include "sensorhub/repository.hpp"
#include "sensorhub/timeutil.hpp"
#include "sensorhub/virtual_sensors.hpp"
#include "sensorhub/vsd.hpp"

namespace sensorhub {

struct ServerConfig {
    std::filesystem::path vsd_dir;
    std::uint16_t http_port = 8080;  // 0 binds an ephemeral port
    std::optional<std::filesystem::path> data_dir;
    std::chrono::seconds idle_timeout{60};
};

// The acquisition server: loads every virtual sensor definition from a
// directory, brings up the wrappers they ask for, and serves the stored
// streams over a small HTTP read API.
class Server {
public:
    explicit Server(ServerConfig config)
        : config_(std::move(config)), host_(repository_, config_.data_dir) {
        repository_.register_kind(AndroidWrapper::kKindName,
                                  [this](const WrapperConnectionRequest& wcr) {
                                      auto params = AndroidWrapper::parse_params(wcr);
                                      if (wcr.param("idle-timeout-secs").empty()) {
                                          params.idle_timeout = config_.idle_timeout;
                                      }
                                      return std::make_shared<AndroidWrapper>(params);
                                  });
    }

    ~Server() { stop(); }

    // Loads definitions and starts the HTTP listener. Definition files that
    // fail to load are logged and skipped; the server still starts so the
    // remaining sensors stay reachable. Throws only when the HTTP port
    // cannot be bound.
    void start() {
        load_definitions();
        if (host_.size() == 0) {
            log::warn("no virtual sensors loaded; serving the HTTP API only");
        }
        install_routes();
        if (config_.http_port == 0) {
            const int port = http_.bind_to_any_port("0.0.0.0");
            if (port < 0) throw ConfigError("cannot bind an HTTP port");
            http_port_ = static_cast<std::uint16_t>(port);
        } else {
            if (!http_.bind_to_port("0.0.0.0", config_.http_port)) {
                throw ConfigError("cannot bind HTTP port " + std::to_string(config_.http_port));
            }
            http_port_ = config_.http_port;
        }
        http_thread_ = std::thread([this] { http_.listen_after_bind(); });
        http_.wait_until_ready();
        log::info("http api listening on port " + std::to_string(http_port_));
        running_ = true;
    }

    void stop() {
        if (!running_.exchange(false)) return;
        http_.stop();
        if (http_thread_.joinable()) http_thread_.join();
        host_.unload_all();
        repository_.shutdown();
    }

    std::uint16_t http_port() const { return http_port_; }

    std::vector<std::string> sensor_names() const { return host_.names(); }

    const std::vector<std::string>& load_failures() const { return load_failures_; }

    std::shared_ptr<const VirtualSensor> find_sensor(const std::string& name) const {
        return host_.find(name);
    }

    // Bound TCP port of the wrapper feeding a virtual sensor; 0 when the
    // sensor is unknown or not fed by an android wrapper.
    std::uint16_t wrapper_port(const std::string& sensor_name) const {
        const auto sensor = host_.find(sensor_name);
        if (!sensor || sensor->registrations.empty()) return 0;
        const auto wrapper = repository_.find(sensor->registrations.front().wcr);
        if (const auto android = std::dynamic_pointer_cast<AndroidWrapper>(wrapper)) {
            return android->listen_port();
        }
        return 0;
    }

    WrapperRepository& repository() { return repository_; }

private:
    void load_definitions() {
        namespace fs = std::filesystem;
        if (!fs::is_directory(config_.vsd_dir)) {
            throw ConfigError("virtual sensor directory does not exist: " +
                              config_.vsd_dir.string());
        }
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(config_.vsd_dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".xml") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            try {
                const auto def = parse_vsd_file(file);
                host_.load(def);
                log::info("loaded virtual sensor '" + def.name + "' from " +
                          file.filename().string());
            } catch (const Error& e) {
                load_failures_.push_back(file.filename().string() + ": " + e.what());
                log::error("skipping " + file.filename().string() + ": " + e.what());
            }
        }
    }

    void install_routes() {
        http_.Get("/sensors", [this](const httplib::Request&, httplib::Response& res) {
            nlohmann::ordered_json out = nlohmann::ordered_json::array();
            for (const auto& name : host_.names()) {
                const auto sensor = host_.find(name);
                if (!sensor) continue;
                nlohmann::ordered_json entry;
                entry["name"] = name;
                entry["fields"] = field_names(*sensor);
                entry["count"] = sensor->buffer->size();
                out.push_back(std::move(entry));
            }
            res.set_content(out.dump(2), "application/json");
        });

        http_.Get("/sensors/:name/latest",
                  [this](const httplib::Request& req, httplib::Response& res) {
                      const auto sensor = host_.find(req.path_params.at("name"));
                      if (!sensor) {
                          respond_error(res, 404, "unknown sensor");
                          return;
                      }
                      std::size_t n = 10;
                      if (req.has_param("n")) {
                          const std::string raw = req.get_param_value("n");
                          try {
                              const long parsed = std::stol(raw);
                              if (parsed < 0) throw std::out_of_range("n");
                              n = static_cast<std::size_t>(parsed);
                          } catch (const std::exception&) {
                              respond_error(res, 400, "parameter n must be a non-negative integer");
                              return;
                          }
                      }
                      nlohmann::ordered_json out = nlohmann::ordered_json::array();
                      for (const auto& element : sensor->buffer->latest(n)) {
                          nlohmann::ordered_json row;
                          row["timestamp"] = format_iso8601_ms(element.timestamp_ms);
                          row["source"] = element.source_id;
                          nlohmann::ordered_json values;
                          for (std::size_t i = 0; i < element.schema->fields.size(); ++i) {
                              values[element.schema->fields[i].name] = element.values[i];
                          }
                          row["values"] = std::move(values);
                          out.push_back(std::move(row));
                      }
                      res.set_content(out.dump(2), "application/json");
                  });
    }

    static void respond_error(httplib::Response& res, int status, const std::string& message) {
        res.status = status;
        nlohmann::ordered_json body;
        body["error"] = message;
        res.set_content(body.dump(2), "application/json");
    }

    // Field names for the sensor listing: prefer the schema of the newest
    // stored element, fall back to the feeding wrapper's negotiated format,
    // and report an empty list before any client has connected.
    std::vector<std::string> field_names(const VirtualSensor& sensor) const {
        SchemaPtr schema = sensor.buffer->current_schema();
        if (!schema && !sensor.registrations.empty()) {
            if (const auto wrapper = repository_.find(sensor.registrations.front().wcr)) {
                try {
                    schema = wrapper->output_format();
                } catch (const NotReadyError&) {
                }
            }
        }
        std::vector<std::string> names;
        if (schema) {
            names.reserve(schema->fields.size());
            for (const auto& field : schema->fields) names.push_back(field.name);
        }
        return names;
    }

    ServerConfig config_;
    WrapperRepository repository_;
    VirtualSensorHost host_;
    std::vector<std::string> load_failures_;
    httplib::Server http_;
    std::thread http_thread_;
    std::uint16_t http_port_ = 0;
    std::atomic<bool> running_{false};
};

}  // namespace sensorhub
