#pragma once

#include <cstdint>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "sensorhub/data_model.hpp"
#include "sensorhub/errors.hpp"
#include "sensorhub/timeutil.hpp"

namespace sensorhub {

// Bounded ring over stream elements. Single writer (the owning wrapper),
// any number of readers; readers get a copied snapshot.
//
// A buffer may serve connections with different metadata selections, so each
// element carries its own schema and is validated against it on append. A
// buffer constructed with a fixed schema additionally rejects elements whose
// selection differs.
class StreamBuffer {
public:
    explicit StreamBuffer(std::size_t capacity, SchemaPtr fixed_schema = nullptr)
        : capacity_(capacity == 0 ? 1 : capacity), fixed_schema_(std::move(fixed_schema)) {}

    void append(StreamElement element) {
        if (!element.schema || element.values.size() != element.schema->fields.size()) {
            throw ValidationError("stream element does not match its schema");
        }
        std::lock_guard lock(mutex_);
        if (fixed_schema_ && element.schema->selection != fixed_schema_->selection) {
            throw ValidationError("stream element selection does not match the buffer schema");
        }
        if (items_.size() == capacity_) {
            items_.pop_front();
        }
        items_.push_back(std::move(element));
        ++total_appended_;
    }

    // Most recent min(n, stored) elements, newest first.
    std::vector<StreamElement> latest(std::size_t n) const {
        std::lock_guard lock(mutex_);
        std::vector<StreamElement> out;
        const std::size_t take = std::min(n, items_.size());
        out.reserve(take);
        for (std::size_t i = 0; i < take; ++i) {
            out.push_back(items_[items_.size() - 1 - i]);
        }
        return out;
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return items_.size();
    }

    std::size_t capacity() const { return capacity_; }

    std::uint64_t total_appended() const {
        std::lock_guard lock(mutex_);
        return total_appended_;
    }

    // Schema of the newest element, or the fixed schema, or null.
    SchemaPtr current_schema() const {
        std::lock_guard lock(mutex_);
        if (!items_.empty()) return items_.back().schema;
        return fixed_schema_;
    }

private:
    const std::size_t capacity_;
    const SchemaPtr fixed_schema_;
    mutable std::mutex mutex_;
    std::deque<StreamElement> items_;
    std::uint64_t total_appended_ = 0;
};

// Append-only CSV persistence: header row is the ISO-8601 timestamp column
// followed by the field names, one row per element. The header binds to the
// first persisted element's schema; elements with a different selection are
// counted and skipped so the file stays rectangular.
class CsvSink {
public:
    explicit CsvSink(std::filesystem::path path) : path_(std::move(path)) {}

    void append(const StreamElement& element) {
        std::lock_guard lock(mutex_);
        if (!out_.is_open()) {
            if (path_.has_parent_path()) {
                std::filesystem::create_directories(path_.parent_path());
            }
            out_.open(path_, std::ios::out | std::ios::app | std::ios::binary);
            if (!out_) {
                throw ConfigError("cannot open " + path_.string() + " for writing");
            }
        }
        if (!bound_schema_) {
            bound_schema_ = element.schema;
            out_ << "timestamp";
            for (const auto& f : bound_schema_->fields) out_ << ',' << f.name;
            out_ << '\n';
        } else if (element.schema->selection != bound_schema_->selection) {
            ++skipped_;
            return;
        }
        out_ << format_iso8601_ms(element.timestamp_ms);
        char buf[32];
        for (float v : element.values) {
            std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
            out_ << ',' << buf;
        }
        out_ << '\n';
        out_.flush();
    }

    const std::filesystem::path& path() const { return path_; }

    std::uint64_t skipped() const {
        std::lock_guard lock(mutex_);
        return skipped_;
    }

private:
    std::filesystem::path path_;
    mutable std::mutex mutex_;
    std::ofstream out_;
    SchemaPtr bound_schema_;
    std::uint64_t skipped_ = 0;
};

}  // namespace sensorhub
