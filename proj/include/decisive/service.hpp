#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "json.hpp"

#include "decisive/elicitation.hpp"
#include "decisive/journal.hpp"
#include "decisive/scenario.hpp"

namespace decisive {

/// Error surfaced to HTTP clients as {code, message, detail} with `status`.
class ServiceError : public std::runtime_error {
public:
    ServiceError(int status, std::string code, const std::string& message, nlohmann::json detail = nullptr)
        : std::runtime_error(message), status_(status), code_(std::move(code)), detail_(std::move(detail)) {}

    int status() const { return status_; }
    const std::string& code() const { return code_; }
    const nlohmann::json& detail() const { return detail_; }
    nlohmann::json to_json() const;

private:
    int status_;
    std::string code_;
    nlohmann::json detail_;
};

using Clock = std::chrono::system_clock;

/// RFC 3339 UTC with milliseconds, e.g. 2026-01-02T03:04:05.678Z.
std::string format_timestamp(Clock::time_point t);

struct ServiceOptions {
    ElicitationConfig defaults;
    /// Append-only log; existing records are replayed at construction.
    std::optional<std::filesystem::path> journal;
    /// Directory searched for "<scenario_id>.json" when a create request names a scenario id.
    std::optional<std::filesystem::path> scenario_dir;
    std::chrono::seconds idle_timeout = std::chrono::hours(24);
    std::function<Clock::time_point()> now = [] { return Clock::now(); };
};

/// In-memory session store driving the elicitation loop. All methods are thread-safe;
/// calls on one session are serialized, calls on different sessions run concurrently.
/// Request and response bodies are the JSON documents of the HTTP API.
class SessionService {
public:
    explicit SessionService(ServiceOptions options = {});
    ~SessionService();

    SessionService(const SessionService&) = delete;
    SessionService& operator=(const SessionService&) = delete;

    /// {"scenario": {...}} or {"scenario_id": "..."}, optional "config" overrides
    /// (tau, kappa, max_questions, particle_count, allow_repeat_questions, seed).
    nlohmann::json create_session(const nlohmann::json& request);
    nlohmann::json next_question(const std::string& id);
    /// {"question": {"factor_a", "factor_b"}, "response": "prefer_a" | ...}
    nlohmann::json submit_answer(const std::string& id, const nlohmann::json& request);
    nlohmann::json recommendation(const std::string& id);

    /// Drops sessions idle for longer than the timeout; returns how many were removed.
    std::size_t expire_idle();
    std::size_t session_count() const;

private:
    struct Record;

    std::shared_ptr<Record> find(const std::string& id);
    void replay(const std::filesystem::path& path);
    std::string new_id();

    ServiceOptions options_;
    std::unique_ptr<Journal> journal_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, std::shared_ptr<Record>> sessions_;
    std::mutex id_mutex_;
    Rng id_rng_;
};

}  // namespace decisive
