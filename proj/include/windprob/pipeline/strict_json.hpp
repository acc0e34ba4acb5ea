#pragma once

#include "windprob/error.hpp"

#include <json.hpp>

#include <optional>
#include <set>
#include <string>

namespace windprob::pipeline {

/// Reads an object field by field and rejects any key that no reader asked for.
class StrictObject {
public:
    StrictObject(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        require(j_.is_object(), ErrorCode::Config, path_ + " must be an object");
    }

    template <typename T>
    void get(const std::string& key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) {
            return;
        }
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::Config, path_ + "." + key + ": " + e.what());
        }
    }

    template <typename T>
    void get(const std::string& key, std::optional<T>& out) {
        seen_.insert(key);
        if (!j_.contains(key)) {
            return;
        }
        if (j_.at(key).is_null()) {
            out.reset();
            return;
        }
        T v{};
        get(key, v);
        out = v;
    }

    template <typename F>
    void object(const std::string& key, F&& read) {
        seen_.insert(key);
        if (j_.contains(key)) {
            StrictObject sub(j_.at(key), path_ + "." + key);
            read(sub);
            sub.finish();
        }
    }

    template <typename F>
    void array(const std::string& key, F&& read_element) {
        seen_.insert(key);
        if (!j_.contains(key)) {
            return;
        }
        const auto& arr = j_.at(key);
        require(arr.is_array(), ErrorCode::Config, path_ + "." + key + " must be an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            StrictObject sub(arr[i], path_ + "." + key + "[" + std::to_string(i) + "]");
            read_element(sub);
            sub.finish();
        }
    }

    bool has(const std::string& key) const { return j_.contains(key); }
    const std::string& path() const { return path_; }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            require(seen_.count(key) > 0, ErrorCode::Config, "unknown key " + path_ + "." + key);
        }
    }

private:
    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

} // namespace windprob::pipeline
