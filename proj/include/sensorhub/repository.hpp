#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "sensorhub/wrapper.hpp"

namespace sensorhub {

// Wrapper name plus initialisation parameters, the key the repository
// matches on. Two requests match iff the names are equal and the parameter
// sets are equal, comparing keys order-insensitively and values exactly.
struct WrapperConnectionRequest {
    std::string wrapper_name;
    std::vector<std::pair<std::string, std::string>> params;

    bool matches(const WrapperConnectionRequest& other) const {
        if (wrapper_name != other.wrapper_name) return false;
        auto a = params;
        auto b = other.params;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        return a == b;
    }

    std::string param(const std::string& key, const std::string& fallback = {}) const {
        for (const auto& [k, v] : params) {
            if (k == key) return v;
        }
        return fallback;
    }

    std::string describe() const {
        std::string s = wrapper_name;
        for (const auto& [k, v] : params) {
            s += ' ';
            s += k;
            s += '=';
            s += v;
        }
        return s;
    }
};

// Shared registry of live wrapper instances, keyed by connection request.
// Acquiring either reuses a matching live instance, creates one through the
// registered factory, or reports the wrapper kind unavailable. A wrapper is
// finalised and dropped when its last query deregisters.
class WrapperRepository {
public:
    using Factory =
        std::function<std::shared_ptr<Wrapper>(const WrapperConnectionRequest&)>;

    enum class Outcome { reused, created, unavailable };

    struct AcquireResult {
        Outcome outcome = Outcome::unavailable;
        std::uint64_t registration_id = 0;
        std::shared_ptr<Wrapper> wrapper;
    };

    void register_kind(std::string kind, Factory factory) {
        std::lock_guard lock(mutex_);
        kinds_[std::move(kind)] = std::move(factory);
    }

    bool knows(const std::string& kind) const {
        std::lock_guard lock(mutex_);
        return kinds_.count(kind) > 0;
    }

    AcquireResult acquire(const WrapperConnectionRequest& wcr,
                          StreamSourceRegistration registration) {
        std::unique_lock lock(mutex_);
        for (auto& entry : instances_) {
            if (entry.wcr.matches(wcr)) {
                const auto id = entry.wrapper->register_query(std::move(registration));
                return {Outcome::reused, id, entry.wrapper};
            }
        }
        const auto kind = kinds_.find(wcr.wrapper_name);
        if (kind == kinds_.end()) {
            return {Outcome::unavailable, 0, nullptr};
        }
        std::shared_ptr<Wrapper> wrapper;
        try {
            wrapper = kind->second(wcr);
        } catch (const Error&) {
            return {Outcome::unavailable, 0, nullptr};
        }
        if (!wrapper || !wrapper->initialise()) {
            // Failed state; release whatever initialise managed to acquire.
            if (wrapper) wrapper->finalise();
            return {Outcome::unavailable, 0, nullptr};
        }
        const auto id = wrapper->register_query(std::move(registration));
        wrapper->start();
        instances_.push_back({wcr, wrapper});
        return {Outcome::created, id, wrapper};
    }

    void release(const WrapperConnectionRequest& wcr, std::uint64_t registration_id) {
        std::shared_ptr<Wrapper> to_finalise;
        {
            std::lock_guard lock(mutex_);
            for (auto it = instances_.begin(); it != instances_.end(); ++it) {
                if (!it->wcr.matches(wcr)) continue;
                it->wrapper->deregister_query(registration_id);
                if (it->wrapper->registered_query_count() == 0) {
                    to_finalise = it->wrapper;
                    instances_.erase(it);
                }
                break;
            }
        }
        if (to_finalise) to_finalise->finalise();
    }

    std::shared_ptr<Wrapper> find(const WrapperConnectionRequest& wcr) const {
        std::lock_guard lock(mutex_);
        for (const auto& entry : instances_) {
            if (entry.wcr.matches(wcr)) return entry.wrapper;
        }
        return nullptr;
    }

    std::size_t instance_count() const {
        std::lock_guard lock(mutex_);
        return instances_.size();
    }

    std::size_t total_registration_count() const {
        std::lock_guard lock(mutex_);
        std::size_t n = 0;
        for (const auto& entry : instances_) n += entry.wrapper->registered_query_count();
        return n;
    }

    // Finalises every live instance. Used at server shutdown.
    void shutdown() {
        std::vector<std::shared_ptr<Wrapper>> wrappers;
        {
            std::lock_guard lock(mutex_);
            for (auto& entry : instances_) wrappers.push_back(entry.wrapper);
            instances_.clear();
        }
        for (auto& w : wrappers) w->finalise();
    }

private:
    struct Entry {
        WrapperConnectionRequest wcr;
        std::shared_ptr<Wrapper> wrapper;
    };

    mutable std::mutex mutex_;
    std::map<std::string, Factory> kinds_;
    std::vector<Entry> instances_;
};

}  // namespace sensorhub
