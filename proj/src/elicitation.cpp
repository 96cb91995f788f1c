#include "decisive/elicitation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

namespace decisive {

namespace {

constexpr double kEigTieTolerance = 1e-12;
constexpr double kUnderflowMass = 1e-300;

void check_question(Question q, std::size_t factors) {
    if (q.factor_a >= q.factor_b || q.factor_b >= factors)
        throw ValidationError("question (" + std::to_string(q.factor_a) + ", " + std::to_string(q.factor_b) +
                              ") is not a canonical pair over " + std::to_string(factors) + " factors");
}

// Entropy of mass bins normalized by their own total.
double bin_entropy(const std::vector<double>& bins) {
    const double total = std::accumulate(bins.begin(), bins.end(), 0.0);
    if (!(total > 0.0)) return 0.0;
    double h = 0.0;
    for (double b : bins) {
        if (b > 0.0) {
            const double p = b / total;
            h -= p * std::log(p);
        }
    }
    return std::max(h, 0.0);
}

// EIG for one pair given the per-persona best options, which never change under reweighting.
double eig_given_best(const ParticleSet& particles, std::span<const std::size_t> best, std::size_t options,
                      Question q, double kappa, double current_entropy, std::vector<double>& bins_a,
                      std::vector<double>& bins_b) {
    bins_a.assign(options, 0.0);
    bins_b.assign(options, 0.0);
    double prefer_a = 0.0;
    for (std::size_t p = 0; p < particles.size(); ++p) {
        const auto w = particles.persona(p);
        const double diff = w[q.factor_a] - w[q.factor_b];
        const double pi = particles.weight(p);
        const double mass_a = pi * sigmoid(kappa * diff);
        const double mass_b = pi * sigmoid(-kappa * diff);
        bins_a[best[p]] += mass_a;
        bins_b[best[p]] += mass_b;
        prefer_a += mass_a;
    }
    const double prefer_b = 1.0 - prefer_a;
    return current_entropy - (prefer_a * bin_entropy(bins_a) + prefer_b * bin_entropy(bins_b));
}

}  // namespace

Question Question::make(std::size_t a, std::size_t b) {
    if (a == b) throw ValidationError("a question needs two distinct factors, got " + std::to_string(a) + " twice");
    return a < b ? Question{a, b} : Question{b, a};
}

std::string_view to_string(Response r) {
    switch (r) {
        case Response::PreferA: return "prefer_a";
        case Response::PreferB: return "prefer_b";
        case Response::Neutral: return "neutral";
        case Response::BothImportant: return "both_important";
    }
    return "unknown";
}

std::optional<Response> parse_response(std::string_view text) {
    for (auto r : {Response::PreferA, Response::PreferB, Response::Neutral, Response::BothImportant})
        if (text == to_string(r)) return r;
    return std::nullopt;
}

std::string_view to_string(StopReason r) {
    switch (r) {
        case StopReason::ConfidenceReached: return "confidence_reached";
        case StopReason::BudgetExhausted: return "budget_exhausted";
        case StopReason::NoQuestionsLeft: return "no_questions_left";
    }
    return "unknown";
}

std::optional<StopReason> parse_stop_reason(std::string_view text) {
    for (auto r : {StopReason::ConfidenceReached, StopReason::BudgetExhausted, StopReason::NoQuestionsLeft})
        if (text == to_string(r)) return r;
    return std::nullopt;
}

void ElicitationConfig::validate() const {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ValidationError("kappa must be a positive finite number");
    if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("tau must lie in [0, 1]");
    if (particle_count == 0) throw ValidationError("particle_count must be at least 1");
}

std::size_t ElicitationConfig::question_budget(std::size_t factors) const {
    if (max_questions) return *max_questions;
    const std::size_t pairs = factors * (factors - (factors > 0 ? 1 : 0)) / 2;
    return std::min<std::size_t>(20, pairs);
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double response_likelihood(std::span<const double> persona, Question q, Response r, double kappa) {
    check_question(q, persona.size());
    const double wa = persona[q.factor_a];
    const double wb = persona[q.factor_b];
    switch (r) {
        case Response::PreferA: return sigmoid(kappa * (wa - wb));
        case Response::PreferB: return sigmoid(kappa * (wb - wa));
        case Response::Neutral: return 4.0 * sigmoid(kappa * (wa - wb)) * sigmoid(kappa * (wb - wa));
        case Response::BothImportant: {
            const double centre = 1.0 / static_cast<double>(persona.size());
            return sigmoid(kappa * (wa - centre)) * sigmoid(kappa * (wb - centre));
        }
    }
    throw ValidationError("unknown response kind");
}

void update_in_place(ParticleSet& particles, Question q, Response r, double kappa) {
    check_question(q, particles.dimension());
    std::vector<double> weights(particles.size());
    double total = 0.0;
    for (std::size_t p = 0; p < particles.size(); ++p) {
        weights[p] = particles.weight(p) * response_likelihood(particles.persona(p), q, r, kappa);
        total += weights[p];
    }
    if (!(total > kUnderflowMass)) throw NumericError("posterior mass underflowed after update");
    for (double& w : weights) {
        w /= total;
        // Inconsistent personas are down-weighted, never eliminated.
        if (w == 0.0) w = std::numeric_limits<double>::min();
    }
    particles.set_weights(std::move(weights));
}

ParticleSet update(const ParticleSet& particles, Question q, Response r, double kappa) {
    ParticleSet out = particles;
    update_in_place(out, q, r, kappa);
    return out;
}

PredictiveProbs predictive_response_probs(const ParticleSet& particles, Question q, double kappa) {
    check_question(q, particles.dimension());
    double prefer_a = 0.0;
    for (std::size_t p = 0; p < particles.size(); ++p) {
        const auto w = particles.persona(p);
        prefer_a += particles.weight(p) * sigmoid(kappa * (w[q.factor_a] - w[q.factor_b]));
    }
    return {prefer_a, 1.0 - prefer_a};
}

double expected_information_gain(const ParticleSet& particles, const ScoringMatrix& matrix, Question q,
                                 double kappa) {
    check_question(q, particles.dimension());
    const auto best = best_options(particles, matrix);
    const auto current = decision_distribution(best, particles.weights(), matrix.rows());
    std::vector<double> bins_a, bins_b;
    return eig_given_best(particles, best, matrix.rows(), q, kappa, current.entropy, bins_a, bins_b);
}

std::vector<Question> all_questions(std::size_t factors) {
    std::vector<Question> out;
    for (std::size_t a = 0; a < factors; ++a)
        for (std::size_t b = a + 1; b < factors; ++b) out.push_back({a, b});
    return out;
}

// ---------------------------------------------------------------------------
// SessionState

SessionState::SessionState(ScoringMatrix matrix, ParticleSet particles, ElicitationConfig config)
    : matrix_(std::move(matrix)), particles_(std::move(particles)), config_(config) {
    config_.validate();
    if (particles_.dimension() != matrix_.cols())
        throw DimensionError("particle dimension " + std::to_string(particles_.dimension()) +
                             " does not match " + std::to_string(matrix_.cols()) + " factors");
    budget_ = config_.question_budget(matrix_.cols());
    persona_best_ = best_options(particles_, matrix_);
    refresh();
    stop_reason_ = should_stop(*this);
}

SessionState SessionState::start(ScoringMatrix matrix, ElicitationConfig config, Rng& rng) {
    config.validate();
    auto particles = ParticleSet::sample_prior(matrix.cols(), config.particle_count, rng);
    return SessionState(std::move(matrix), std::move(particles), config);
}

bool SessionState::was_asked(Question q) const {
    return std::any_of(transcript_.begin(), transcript_.end(),
                       [&](const TranscriptEntry& e) { return e.question == q; });
}

std::vector<Question> SessionState::eligible_questions() const {
    auto pool = all_questions(matrix_.cols());
    if (!config_.allow_repeat_questions)
        std::erase_if(pool, [&](Question q) { return was_asked(q); });
    return pool;
}

void SessionState::record(Question q, Response r) {
    if (!active())
        throw SessionStoppedError("session already stopped (" + std::string(to_string(*stop_reason_)) + ")");
    check_question(q, matrix_.cols());
    if (!config_.allow_repeat_questions && was_asked(q))
        throw ValidationError("pair (" + std::to_string(q.factor_a) + ", " + std::to_string(q.factor_b) +
                              ") was already asked");
    update_in_place(particles_, q, r, config_.kappa);
    refresh();
    transcript_.push_back({q, r, decision_.confidence()});
    stop_reason_ = should_stop(*this);
}

void SessionState::refresh() {
    decision_ = decision_distribution(persona_best_, particles_.weights(), matrix_.rows());
}

// ---------------------------------------------------------------------------
// Selection, stopping, recommendation

std::optional<Question> select_question(const SessionState& state) {
    const auto pool = state.eligible_questions();
    if (pool.empty()) return std::nullopt;
    const double h = state.decision().entropy;
    std::vector<double> bins_a, bins_b;
    std::optional<Question> chosen;
    double chosen_eig = -std::numeric_limits<double>::infinity();
    for (const auto q : pool) {
        const double eig = eig_given_best(state.particles(), state.persona_best(), state.matrix().rows(), q,
                                          state.config().kappa, h, bins_a, bins_b);
        if (!chosen || eig > chosen_eig + kEigTieTolerance) {
            chosen = q;
            chosen_eig = eig;
        }
    }
    return chosen;
}

std::optional<StopReason> should_stop(const SessionState& state) {
    // A single factor admits no tradeoff question at all.
    if (state.matrix().cols() < 2) return StopReason::NoQuestionsLeft;
    if (state.confidence() >= state.config().tau) return StopReason::ConfidenceReached;
    const bool pool_empty = state.eligible_questions().empty();
    if (state.questions_asked() >= state.question_budget()) {
        // The default budget is capped by the pair count; running out of pairs is the real cause then.
        const bool budget_from_pool = !state.config().max_questions && !state.config().allow_repeat_questions;
        return budget_from_pool && pool_empty ? StopReason::NoQuestionsLeft : StopReason::BudgetExhausted;
    }
    if (pool_empty) return StopReason::NoQuestionsLeft;
    return std::nullopt;
}

std::vector<double> expected_utilities(const ParticleSet& particles, const ScoringMatrix& matrix) {
    // Linear utilities: the weighted mean of S w^(p) is S times the posterior mean.
    return utilities(matrix, particles.posterior_mean());
}

std::vector<std::size_t> recommend(const ParticleSet& particles, const ScoringMatrix& matrix) {
    return rank_descending(expected_utilities(particles, matrix));
}

SessionResult summarize(const SessionState& state) {
    SessionResult result;
    result.expected_utility = expected_utilities(state.particles(), state.matrix());
    result.ranking = rank_descending(result.expected_utility);
    result.question_count = state.questions_asked();
    result.transcript = state.transcript();
    result.final_decision = state.decision();
    result.stop_reason = state.stop_reason().value_or(StopReason::BudgetExhausted);
    return result;
}

SessionResult run_session(SessionState& state, const Responder& responder) {
    while (state.active()) {
        const auto q = select_question(state);
        if (!q) break;  // unreachable: should_stop covers an empty pool
        Response r;
        try {
            r = responder(*q);
        } catch (const std::exception& e) {
            throw SessionAborted(std::string("responder failed: ") + e.what(), state.transcript());
        }
        state.record(*q, r);
    }
    return summarize(state);
}

SessionResult run_session(const ScoringMatrix& matrix, const Responder& responder,
                          const ElicitationConfig& config, Rng& rng) {
    auto state = SessionState::start(matrix, config, rng);
    return run_session(state, responder);
}

}  // namespace decisive
