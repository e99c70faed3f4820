#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include "sensorhub/data_model.hpp"
#include "sensorhub/errors.hpp"
#include "sensorhub/log.hpp"
#include "sensorhub/net.hpp"
#include "sensorhub/protocol.hpp"
#include "sensorhub/repository.hpp"
#include "sensorhub/timeutil.hpp"
#include "sensorhub/wrapper.hpp"

namespace sensorhub {

// Acquisition wrapper for phone-style TCP clients. Each connection opens with
// a two byte metadata word naming its enabled sensors, then streams
// fixed-length frames of big-endian floats until it closes.
class AndroidWrapper final : public Wrapper {
public:
    static constexpr const char* kKindName = "android";

    struct Params {
        std::string host = "0.0.0.0";
        std::uint16_t port = 0;
        std::chrono::seconds idle_timeout{60};
    };

    explicit AndroidWrapper(Params params) : params_(std::move(params)) {}

    static Params parse_params(const WrapperConnectionRequest& wcr) {
        Params p;
        const std::string port_text = wcr.param("port", "");
        if (port_text.empty()) {
            throw ConfigError("android wrapper requires a 'port' predicate");
        }
        try {
            const int port = std::stoi(port_text);
            if (port < 0 || port > 65535) throw std::out_of_range("port");
            p.port = static_cast<std::uint16_t>(port);
        } catch (const std::exception&) {
            throw ConfigError("android wrapper: invalid port '" + port_text + "'");
        }
        p.host = wcr.param("host", p.host);
        const std::string timeout_text = wcr.param("idle-timeout-secs", "");
        if (!timeout_text.empty()) {
            try {
                const long secs = std::stol(timeout_text);
                if (secs <= 0) throw std::out_of_range("idle-timeout-secs");
                p.idle_timeout = std::chrono::seconds(secs);
            } catch (const std::exception&) {
                throw ConfigError("android wrapper: invalid idle-timeout-secs '" + timeout_text +
                                  "'");
            }
        }
        return p;
    }

    std::string name() const override { return kKindName; }

    // Actual bound port; differs from Params::port when that was 0.
    std::uint16_t listen_port() const { return listener_.port(); }

    std::uint64_t connections_accepted() const { return connections_accepted_.load(); }
    std::uint64_t frames_received() const { return frames_received_.load(); }
    std::uint64_t handshakes_rejected() const { return handshakes_rejected_.load(); }
    std::uint64_t frames_discarded() const { return frames_discarded_.load(); }

protected:
    bool do_initialise() override {
        listener_ = net::TcpListener::bind(params_.host, params_.port);
        log::info("android wrapper listening on " + params_.host + ":" +
                  std::to_string(listener_.port()));
        return true;
    }

    void do_run(std::stop_token stop) override {
        while (!stop.stop_requested()) {
            auto stream = listener_.accept(std::chrono::milliseconds(100));
            if (!stream) continue;
            connections_accepted_.fetch_add(1);
            std::lock_guard lock(connections_mutex_);
            reap_finished_locked();
            auto conn = std::make_unique<Connection>();
            conn->stream = std::move(*stream);
            Connection* raw = conn.get();
            conn->worker = std::jthread(
                [this, raw](std::stop_token conn_stop) { handle_connection(*raw, conn_stop); });
            connections_.push_back(std::move(conn));
        }
    }

    void on_stop_requested() override {
        // Wake the accept loop and every blocked reader.
        listener_.shutdown_both();
        std::lock_guard lock(connections_mutex_);
        for (auto& conn : connections_) {
            conn->worker.request_stop();
            conn->stream.shutdown_both();
        }
    }

    void do_finalise() override {
        listener_.shutdown_both();
        {
            std::lock_guard lock(connections_mutex_);
            for (auto& conn : connections_) {
                conn->worker.request_stop();
                conn->stream.shutdown_both();
            }
        }
        // Joining outside the lock would race list mutation; the run loop has
        // already stopped by the time finalise runs, so holding it is safe.
        std::lock_guard lock(connections_mutex_);
        for (auto& conn : connections_) {
            if (conn->worker.joinable()) conn->worker.join();
        }
        connections_.clear();
        listener_.close();
    }

private:
    struct Connection {
        net::TcpStream stream;
        std::jthread worker;
        std::atomic<bool> done{false};
    };

    void reap_finished_locked() {
        for (auto it = connections_.begin(); it != connections_.end();) {
            if ((*it)->done.load()) {
                if ((*it)->worker.joinable()) (*it)->worker.join();
                it = connections_.erase(it);
            } else {
                ++it;
            }
        }
    }

    void handle_connection(Connection& conn, std::stop_token stop) {
        const std::string peer = conn.stream.peer();
        run_connection(conn, stop, peer);
        conn.stream.close();
        conn.done.store(true);
    }

    void run_connection(Connection& conn, std::stop_token stop, const std::string& peer) {
        const auto cancelled = [&stop] { return stop.stop_requested(); };

        std::array<std::uint8_t, kMetadataWireSize> header{};
        const auto header_status = conn.stream.read_exact(header, params_.idle_timeout, cancelled);
        if (header_status != net::ReadStatus::ok) {
            if (header_status == net::ReadStatus::timeout) {
                log::warn("connection " + peer + " sent no metadata before the idle timeout");
            }
            return;
        }

        MetadataPacket metadata;
        try {
            metadata = decode_metadata(header);
        } catch (const Error& e) {
            handshakes_rejected_.fetch_add(1);
            log::warn("rejecting connection " + peer + ": " + e.what());
            return;
        }

        const SchemaPtr schema = make_schema(metadata);
        set_output_schema(schema);
        const std::size_t frame_bytes = expected_payload_bytes(metadata);
        std::vector<std::uint8_t> frame(frame_bytes);
        log::info("connection " + peer + " streaming " + std::to_string(metadata.enabled_count()) +
                  " sensors, " + std::to_string(frame_bytes) + " byte frames");

        // Wall-clock stamps, clamped so each element within a connection is
        // monotonically non-decreasing even if the clock steps backwards.
        std::int64_t last_timestamp_ms = 0;
        while (!stop.stop_requested()) {
            const auto status = conn.stream.read_exact(frame, params_.idle_timeout, cancelled);
            if (status == net::ReadStatus::clean_eof) {
                return;  // closed on a frame boundary: normal end of session
            }
            if (status == net::ReadStatus::truncated_eof) {
                frames_discarded_.fetch_add(1);
                log::warn("connection " + peer + " closed mid-frame; partial frame discarded");
                return;
            }
            if (status == net::ReadStatus::timeout) {
                log::warn("connection " + peer + " idle too long; closing");
                return;
            }
            if (status != net::ReadStatus::ok) return;

            ReadingGroups groups;
            try {
                groups = decode_readings(metadata, frame);
            } catch (const Error& e) {
                frames_discarded_.fetch_add(1);
                log::warn("connection " + peer + " sent an undecodable frame: " + e.what());
                return;
            }
            last_timestamp_ms = std::max(last_timestamp_ms, now_epoch_ms());
            publish(map_sensor_data(schema, groups, peer, last_timestamp_ms));
            frames_received_.fetch_add(1);
        }
    }

    Params params_;
    net::TcpListener listener_;
    std::mutex connections_mutex_;
    std::list<std::unique_ptr<Connection>> connections_;
    std::atomic<std::uint64_t> connections_accepted_{0};
    std::atomic<std::uint64_t> frames_received_{0};
    std::atomic<std::uint64_t> handshakes_rejected_{0};
    std::atomic<std::uint64_t> frames_discarded_{0};
};

}  // namespace sensorhub
