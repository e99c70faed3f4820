#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "sensorhub/data_model.hpp"
#include "sensorhub/errors.hpp"

namespace sensorhub {

// A stream source's standing subscription to a wrapper's output.
struct StreamSourceRegistration {
    std::string virtual_sensor;
    std::function<void(const StreamElement&)> sink;
};

// Base class for acquisition plugins.
//
// Lifecycle: created -> initialised -> running -> finalised, with failed
// reachable from anywhere. initialise() is the only place a subclass may
// acquire external resources (sockets, files); finalise() releases them all
// and is idempotent. The run loop executes on its own thread, started by
// start() and stopped through the std::stop_token.
class Wrapper {
public:
    enum class State { created, initialised, running, finalised, failed };

    virtual ~Wrapper() = default;

    virtual std::string name() const = 0;

    // Returns false (and enters the failed state) when resource acquisition
    // fails. Calling it twice is an illegal transition.
    bool initialise() {
        {
            std::lock_guard lock(mutex_);
            if (state_ != State::created) {
                throw LifecycleError("initialise() called in state " +
                                     std::string(to_string(state_)));
            }
        }
        bool ok = false;
        try {
            ok = do_initialise();
        } catch (...) {
            set_state(State::failed);
            return false;
        }
        set_state(ok ? State::initialised : State::failed);
        return ok;
    }

    void start() {
        std::lock_guard lock(mutex_);
        if (state_ != State::initialised) {
            throw LifecycleError("start() called in state " + std::string(to_string(state_)));
        }
        state_ = State::running;
        run_thread_ = std::jthread([this](std::stop_token stop) { do_run(std::move(stop)); });
    }

    // Stops the run loop and releases everything initialise() acquired.
    // Safe to call repeatedly and from any state; a failed wrapper keeps its
    // failed state but still gets its resources released.
    void finalise() {
        State entered;
        {
            std::lock_guard lock(mutex_);
            if (finalise_done_) return;
            finalise_done_ = true;
            entered = state_;
        }
        if (run_thread_.joinable()) {
            run_thread_.request_stop();
            on_stop_requested();
            run_thread_.join();
        }
        if (entered != State::created) {
            do_finalise();
        }
        std::lock_guard lock(mutex_);
        if (state_ != State::failed) state_ = State::finalised;
    }

    State state() const {
        std::lock_guard lock(mutex_);
        return state_;
    }

    // Schema from the most recent client handshake. Throws until one
    // completes; the wrapper rebuilds it whenever a client negotiates a
    // different selection.
    SchemaPtr output_format() const {
        std::lock_guard lock(mutex_);
        if (!schema_) {
            throw NotReadyError("wrapper '" + name() + "' has no negotiated schema yet");
        }
        return schema_;
    }

    std::uint64_t register_query(StreamSourceRegistration registration) {
        std::lock_guard lock(mutex_);
        const auto id = next_registration_id_++;
        queries_.emplace(id, std::move(registration));
        return id;
    }

    void deregister_query(std::uint64_t id) {
        std::lock_guard lock(mutex_);
        queries_.erase(id);
    }

    std::size_t registered_query_count() const {
        std::lock_guard lock(mutex_);
        return queries_.size();
    }

    static std::string_view to_string(State s) {
        switch (s) {
            case State::created: return "created";
            case State::initialised: return "initialised";
            case State::running: return "running";
            case State::finalised: return "finalised";
            case State::failed: return "failed";
        }
        return "?";
    }

protected:
    virtual bool do_initialise() = 0;
    virtual void do_run(std::stop_token stop) = 0;
    virtual void do_finalise() = 0;

    // Called (possibly from another thread) after a stop request, so a
    // blocked run loop can be unblocked, e.g. by shutting down sockets.
    virtual void on_stop_requested() {}

    // Fan one element out to every registered stream-source query.
    void publish(const StreamElement& element) {
        std::vector<std::function<void(const StreamElement&)>> sinks;
        {
            std::lock_guard lock(mutex_);
            sinks.reserve(queries_.size());
            for (const auto& [id, reg] : queries_) sinks.push_back(reg.sink);
        }
        for (const auto& sink : sinks) sink(element);
    }

    void set_output_schema(SchemaPtr schema) {
        std::lock_guard lock(mutex_);
        schema_ = std::move(schema);
    }

    void mark_failed() { set_state(State::failed); }

private:
    void set_state(State s) {
        std::lock_guard lock(mutex_);
        state_ = s;
    }

    mutable std::mutex mutex_;
    State state_ = State::created;
    bool finalise_done_ = false;
    std::jthread run_thread_;
    SchemaPtr schema_;
    std::map<std::uint64_t, StreamSourceRegistration> queries_;
    std::uint64_t next_registration_id_ = 1;
};

}  // namespace sensorhub
