#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "decisive/core.hpp"
#include "decisive/elicitation.hpp"
#include "decisive/metrics.hpp"
#include "decisive/scenario.hpp"

namespace decisive {

struct DeterministicUser {};

/// P(prefer a) = sigmoid((w_a - w_b) / temperature).
struct BradleyTerryUser {
    double temperature = 0.05;
};

using UserMode = std::variant<DeterministicUser, BradleyTerryUser>;

struct SimulatedUser {
    PreferenceVector true_prefs;
    UserMode mode = DeterministicUser{};

    void validate() const;
};

/// Deterministic users prefer a iff w*_a > w*_b (ties answer b). The rng is only
/// consumed in Bradley-Terry mode.
Response simulate_response(const SimulatedUser& user, Question q, Rng& rng);

/// M x K matrix with entries drawn uniformly from {0, 1/7, ..., 1}; no ground truth.
Scenario generate_synthetic_scenario(std::size_t options, std::size_t factors, Rng& rng);

struct SyntheticSource {
    std::size_t options = 10;
    std::size_t factors = 11;
};

/// Fixed scenario, or a fresh synthetic scenario per trial.
using ScenarioSource = std::variant<SyntheticSource, Scenario>;

struct TrialConfig {
    ScenarioSource source = SyntheticSource{};
    std::size_t trials = 100;
    ElicitationConfig elicitation;
    UserMode user = DeterministicUser{};
    std::uint64_t seed = 0;
    /// Worker threads; 0 means hardware concurrency. Results do not depend on it.
    std::size_t jobs = 1;
    NdcgGains gains;

    void validate() const;
};

/// Independent random streams of one trial, all derived from (base seed, trial index).
struct TrialSeeds {
    std::uint64_t trial = 0;
    std::uint64_t scenario = 0;
    std::uint64_t truth = 0;
    std::uint64_t particles = 0;
    std::uint64_t responder = 0;

    static TrialSeeds derive(std::uint64_t base, std::size_t trial_index);
};

struct TrialRecord {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::size_t true_best = 0;
    std::vector<std::size_t> true_ranking;
    std::vector<std::size_t> predicted;
    TrialOutcome outcome;
    StopReason stop_reason = StopReason::ConfidenceReached;
    std::size_t question_budget = 0;
    double final_confidence = 0.0;
    double seconds = 0.0;
};

struct TrialsResult {
    MetricsReport report;
    std::vector<TrialRecord> trials;
    /// Mean wall time of the elicitation session per trial; not part of any report file.
    double mean_session_seconds = 0.0;
};

/// Runs one trial in isolation.
TrialRecord run_trial(const TrialConfig& config, std::size_t trial_index);

TrialsResult run_trials(const TrialConfig& config);

/// Options sorted by true utility S w*, ties by lowest index.
std::vector<std::size_t> true_ranking(const ScoringMatrix& matrix, const PreferenceVector& truth);

nlohmann::json report_to_json(const MetricsReport& report, const TrialConfig& config);
std::string report_to_csv(const MetricsReport& report, const TrialConfig& config);
std::string describe_user(const UserMode& mode);

}  // namespace decisive
