#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "decisive/core.hpp"

namespace decisive {

/// "Which matters more to you: factor a or factor b?" stored as a canonical pair a < b.
struct Question {
    std::size_t factor_a = 0;
    std::size_t factor_b = 1;

    /// Orders the pair; throws ValidationError when a == b.
    static Question make(std::size_t a, std::size_t b);

    friend auto operator<=>(const Question&, const Question&) = default;
};

enum class Response { PreferA, PreferB, Neutral, BothImportant };

/// snake_case wire names: prefer_a, prefer_b, neutral, both_important.
std::string_view to_string(Response r);
std::optional<Response> parse_response(std::string_view text);

enum class StopReason { ConfidenceReached, BudgetExhausted, NoQuestionsLeft };

std::string_view to_string(StopReason r);
std::optional<StopReason> parse_stop_reason(std::string_view text);

struct ElicitationConfig {
    double kappa = 20.0;
    double tau = 0.85;
    /// Unset means min(20, number of factor pairs).
    std::optional<std::size_t> max_questions;
    std::size_t particle_count = 500;
    bool allow_repeat_questions = false;

    void validate() const;
    std::size_t question_budget(std::size_t factors) const;
};

struct TranscriptEntry {
    Question question;
    Response response = Response::PreferA;
    /// max chi after the update.
    double confidence = 0.0;

    friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
};

class SessionStoppedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

double sigmoid(double x);

/// Probability of observing `r` to question `q` from a user whose preferences are `persona`.
double response_likelihood(std::span<const double> persona, Question q, Response r, double kappa);

/// Bayesian reweighting: weights times likelihood, renormalized. Vectors are untouched.
ParticleSet update(const ParticleSet& particles, Question q, Response r, double kappa);
void update_in_place(ParticleSet& particles, Question q, Response r, double kappa);

struct PredictiveProbs {
    double prefer_a = 0.5;
    double prefer_b = 0.5;
};

PredictiveProbs predictive_response_probs(const ParticleSet& particles, Question q, double kappa);

/// Expected drop in decision entropy from asking `q`, averaging the two binary answers
/// under the posterior predictive.
double expected_information_gain(const ParticleSet& particles, const ScoringMatrix& matrix, Question q,
                                 double kappa);

/// All canonical factor pairs in lexicographic order.
std::vector<Question> all_questions(std::size_t factors);

/// One elicitation dialogue. The live particle set changes only through record().
class SessionState {
public:
    SessionState(ScoringMatrix matrix, ParticleSet particles, ElicitationConfig config);

    /// Draws config.particle_count personas from the uniform Dirichlet prior.
    static SessionState start(ScoringMatrix matrix, ElicitationConfig config, Rng& rng);

    const ScoringMatrix& matrix() const { return matrix_; }
    const ParticleSet& particles() const { return particles_; }
    const ElicitationConfig& config() const { return config_; }
    const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
    std::size_t questions_asked() const { return transcript_.size(); }
    std::size_t question_budget() const { return budget_; }

    const DecisionDistribution& decision() const { return decision_; }
    double confidence() const { return decision_.confidence(); }

    /// Best option of each persona; fixed for the session because personas never move.
    const std::vector<std::size_t>& persona_best() const { return persona_best_; }

    bool active() const { return !stop_reason_.has_value(); }
    std::optional<StopReason> stop_reason() const { return stop_reason_; }

    bool was_asked(Question q) const;
    /// Pairs still allowed under the repeat policy.
    std::vector<Question> eligible_questions() const;

    /// Applies a real answer. Throws SessionStoppedError once the session has stopped,
    /// ValidationError for out-of-range or (when disallowed) repeated pairs.
    void record(Question q, Response r);

private:
    void refresh();

    ScoringMatrix matrix_;
    ParticleSet particles_;
    ElicitationConfig config_;
    std::size_t budget_ = 0;
    std::vector<std::size_t> persona_best_;
    std::vector<TranscriptEntry> transcript_;
    DecisionDistribution decision_;
    std::optional<StopReason> stop_reason_;
};

/// Highest-EIG eligible pair; near-ties (within 1e-12) go to the lexicographically smallest pair.
std::optional<Question> select_question(const SessionState& state);

/// Stop conditions in priority order: confidence, budget, exhausted pool. nullopt means continue.
/// With fewer than two factors the answer is always NoQuestionsLeft.
std::optional<StopReason> should_stop(const SessionState& state);

/// Posterior expected utility of each option.
std::vector<double> expected_utilities(const ParticleSet& particles, const ScoringMatrix& matrix);

/// All options by descending posterior expected utility; the first is the recommendation.
std::vector<std::size_t> recommend(const ParticleSet& particles, const ScoringMatrix& matrix);

struct SessionResult {
    std::vector<std::size_t> ranking;
    std::vector<double> expected_utility;
    std::size_t question_count = 0;
    std::vector<TranscriptEntry> transcript;
    DecisionDistribution final_decision;
    StopReason stop_reason = StopReason::ConfidenceReached;
};

using Responder = std::function<Response(const Question&)>;

/// Raised when the responder throws; carries the transcript up to the failure.
class SessionAborted : public std::runtime_error {
public:
    SessionAborted(const std::string& what, std::vector<TranscriptEntry> transcript)
        : std::runtime_error(what), transcript_(std::move(transcript)) {}
    const std::vector<TranscriptEntry>& transcript() const { return transcript_; }

private:
    std::vector<TranscriptEntry> transcript_;
};

/// Runs should_stop -> select_question -> responder -> update until a stop condition holds.
SessionResult run_session(const ScoringMatrix& matrix, const Responder& responder,
                          const ElicitationConfig& config, Rng& rng);

/// Drives an already-started session to completion.
SessionResult run_session(SessionState& state, const Responder& responder);

SessionResult summarize(const SessionState& state);

}  // namespace decisive
