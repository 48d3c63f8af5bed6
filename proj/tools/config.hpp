#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdtof::cli {

/// Bad flags or config: exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <typename T>
struct Flag {
    T value{};
    CLI::Option* opt = nullptr;
    bool given() const { return opt != nullptr && opt->count() > 0; }
};

/// Merges built-in defaults, an optional JSON config file and command-line
/// flags (highest precedence) and records every resolved value so the run
/// can be replayed from the written config.
class ConfigResolver {
public:
    explicit ConfigResolver(nlohmann::json file) : file_(std::move(file)) {
        if (!file_.is_object()) {
            throw UsageError("config file must contain a JSON object");
        }
    }

    template <typename T>
    T take(const std::string& key, const Flag<T>& flag, T fallback) {
        T v = std::move(fallback);
        if (flag.given()) {
            v = flag.value;
        } else if (file_.contains(key) && !file_.at(key).is_null()) {
            v = read<T>(key);
        }
        check_declared(key);
        resolved_[key] = v;
        return v;
    }

    template <typename T>
    std::optional<T> take_optional(const std::string& key, const Flag<T>& flag) {
        std::optional<T> v;
        if (flag.given()) {
            v = flag.value;
        } else if (file_.contains(key) && !file_.at(key).is_null()) {
            v = read<T>(key);
        }
        check_declared(key);
        resolved_[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
        return v;
    }

    /// Sets the keys the command accepts and rejects any other config field,
    /// before option checks can mask a misspelt key.
    void declare(const std::string& command, const std::vector<std::string>& keys) {
        if (file_.contains("command") && file_.at("command") != command) {
            throw UsageError("config is for command " + file_.at("command").dump() + ", not '" + command + "'");
        }
        known_.insert(keys.begin(), keys.end());
        for (const auto& [key, _] : file_.items()) {
            if (key != "command" && !known_.count(key)) {
                throw UsageError("config field '" + key + "': unknown for command '" + command + "'");
            }
        }
        resolved_["command"] = command;
    }

    const nlohmann::json& resolved() const { return resolved_; }

private:
    void check_declared(const std::string& key) const {
        if (!known_.count(key)) {
            throw std::logic_error("config key '" + key + "' is not declared by its command");
        }
    }

    template <typename T>
    T read(const std::string& key) {
        const auto& node = file_.at(key);
        if constexpr (std::is_unsigned_v<T>) {
            if (!node.is_number_unsigned()) {
                throw UsageError("config field '" + key + "': expected a non-negative integer");
            }
        }
        try {
            return node.get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw UsageError("config field '" + key + "': " + e.what());
        }
    }

    nlohmann::json file_;
    nlohmann::json resolved_ = nlohmann::json::object();
    std::set<std::string> known_;
};

} // namespace fdtof::cli
