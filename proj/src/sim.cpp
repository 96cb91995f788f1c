#include "decisive/sim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace decisive {

using nlohmann::json;

void SimulatedUser::validate() const {
    if (const auto* bt = std::get_if<BradleyTerryUser>(&mode)) {
        if (!(bt->temperature > 0.0) || !std::isfinite(bt->temperature))
            throw ValidationError("Bradley-Terry temperature must be positive");
    }
}

Response simulate_response(const SimulatedUser& user, Question q, Rng& rng) {
    if (q.factor_b >= user.true_prefs.size() || q.factor_a >= q.factor_b)
        throw ValidationError("question does not index the user's factors");
    const double diff = user.true_prefs[q.factor_a] - user.true_prefs[q.factor_b];
    if (const auto* bt = std::get_if<BradleyTerryUser>(&user.mode)) {
        const double p_a = sigmoid(diff / bt->temperature);
        return uniform01(rng) < p_a ? Response::PreferA : Response::PreferB;
    }
    return diff > 0.0 ? Response::PreferA : Response::PreferB;
}

Scenario generate_synthetic_scenario(std::size_t options, std::size_t factors, Rng& rng) {
    if (options < 2 || factors < 2) throw ValidationError("synthetic scenarios need M >= 2 and K >= 2");
    Scenario s{"synthetic decision", {}, {}, ScoringMatrix(1, 1, {0.0}), std::nullopt, std::nullopt, std::nullopt};
    for (std::size_t i = 0; i < options; ++i) s.options.push_back({"option " + std::to_string(i + 1), {}});
    for (std::size_t j = 0; j < factors; ++j) s.factors.push_back({"factor " + std::to_string(j + 1), ""});
    std::vector<double> values(options * factors);
    for (double& v : values) {
        // rng() % 8 is unbiased for a power-of-two modulus.
        v = static_cast<double>(rng() % kLevelCount) / 7.0;
    }
    s.matrix = matrix_for(s.options, s.factors, std::move(values));
    return s;
}

void TrialConfig::validate() const {
    if (trials == 0) throw ValidationError("trials must be at least 1");
    elicitation.validate();
    SimulatedUser{PreferenceVector::uniform(1), user}.validate();
    if (const auto* syn = std::get_if<SyntheticSource>(&source)) {
        if (syn->options < 2 || syn->factors < 2) throw ValidationError("synthetic scenarios need M >= 2 and K >= 2");
    } else {
        std::get<Scenario>(source).validate();
    }
}

TrialSeeds TrialSeeds::derive(std::uint64_t base, std::size_t trial_index) {
    TrialSeeds s;
    s.trial = mix_seed(base, trial_index);
    s.scenario = mix_seed(s.trial, 0);
    s.truth = mix_seed(s.trial, 1);
    s.particles = mix_seed(s.trial, 2);
    s.responder = mix_seed(s.trial, 3);
    return s;
}

std::vector<std::size_t> true_ranking(const ScoringMatrix& matrix, const PreferenceVector& truth) {
    return rank_descending(utilities(matrix, truth));
}

TrialRecord run_trial(const TrialConfig& config, std::size_t trial_index) {
    const auto seeds = TrialSeeds::derive(config.seed, trial_index);

    Rng scenario_rng(seeds.scenario);
    const Scenario* fixed = std::get_if<Scenario>(&config.source);
    std::optional<Scenario> generated;
    if (!fixed) {
        const auto& syn = std::get<SyntheticSource>(config.source);
        generated = generate_synthetic_scenario(syn.options, syn.factors, scenario_rng);
    }
    const Scenario& scenario = fixed ? *fixed : *generated;
    const ScoringMatrix& matrix = scenario.matrix;

    Rng truth_rng(seeds.truth);
    const PreferenceVector truth = scenario.ground_truth_prefs ? *scenario.ground_truth_prefs
                                                               : sample_simplex(matrix.cols(), 1.0, truth_rng);
    const SimulatedUser user{truth, config.user};

    TrialRecord record;
    record.index = trial_index;
    record.seed = seeds.trial;
    record.true_ranking = true_ranking(matrix, truth);
    record.true_best = record.true_ranking.front();

    Rng responder_rng(seeds.responder);
    Rng particle_rng(seeds.particles);
    const auto started = std::chrono::steady_clock::now();
    const auto result = run_session(
        matrix, [&](const Question& q) { return simulate_response(user, q, responder_rng); }, config.elicitation,
        particle_rng);
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    record.predicted = result.ranking;
    record.outcome = score_trial(result.ranking, record.true_ranking, result.question_count, config.gains);
    record.stop_reason = result.stop_reason;
    record.question_budget = config.elicitation.question_budget(matrix.cols());
    record.final_confidence = result.final_decision.confidence();
    return record;
}

TrialsResult run_trials(const TrialConfig& config) {
    config.validate();
    std::vector<TrialRecord> records(config.trials);
    std::size_t jobs = config.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.jobs;
    jobs = std::min(jobs, config.trials);

    if (jobs <= 1) {
        for (std::size_t t = 0; t < config.trials; ++t) records[t] = run_trial(config, t);
    } else {
        std::atomic<std::size_t> next{0};
        std::mutex error_mutex;
        std::exception_ptr error;
        std::vector<std::thread> workers;
        for (std::size_t w = 0; w < jobs; ++w) {
            workers.emplace_back([&] {
                for (std::size_t t = next.fetch_add(1); t < config.trials; t = next.fetch_add(1)) {
                    try {
                        records[t] = run_trial(config, t);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                    }
                }
            });
        }
        for (auto& w : workers) w.join();
        if (error) std::rethrow_exception(error);
    }

    TrialsResult out;
    std::vector<TrialOutcome> outcomes;
    outcomes.reserve(records.size());
    double seconds = 0.0;
    for (const auto& r : records) {
        outcomes.push_back(r.outcome);
        seconds += r.seconds;
    }
    out.report = aggregate(outcomes);
    out.mean_session_seconds = seconds / static_cast<double>(records.size());
    out.trials = std::move(records);
    return out;
}

std::string describe_user(const UserMode& mode) {
    if (const auto* bt = std::get_if<BradleyTerryUser>(&mode)) return "bradley_terry(" + json(bt->temperature).dump() + ")";
    return "deterministic";
}

json report_to_json(const MetricsReport& report, const TrialConfig& config) {
    json source;
    if (const auto* syn = std::get_if<SyntheticSource>(&config.source)) {
        source = {{"kind", "synthetic"}, {"options", syn->options}, {"factors", syn->factors}};
    } else {
        const auto& s = std::get<Scenario>(config.source);
        source = {{"kind", "file"}, {"options", s.matrix.rows()}, {"factors", s.matrix.cols()}};
    }
    json user = {{"mode", "deterministic"}};
    if (const auto* bt = std::get_if<BradleyTerryUser>(&config.user))
        user = {{"mode", "bradley_terry"}, {"temperature", bt->temperature}};
    const auto& e = config.elicitation;
    json elicitation = {{"kappa", e.kappa},
                        {"tau", e.tau},
                        {"profiles", e.particle_count},
                        {"allow_repeat_questions", e.allow_repeat_questions}};
    elicitation["max_questions"] = e.max_questions ? json(*e.max_questions) : json(nullptr);
    return {{"metrics",
             {{"top1", report.top1},
              {"top2", report.top2},
              {"ndcg3", report.ndcg3},
              {"mrr", report.mrr},
              {"avg_questions", report.avg_questions},
              {"trials", report.trials},
              {"seed", config.seed}}},
            {"scenario", source},
            {"user", user},
            {"elicitation", elicitation}};
}

std::string report_to_csv(const MetricsReport& report, const TrialConfig& config) {
    std::ostringstream out;
    out << "top1,top2,ndcg3,mrr,avg_questions,trials,seed\n";
    out << json(report.top1).dump() << ',' << json(report.top2).dump() << ',' << json(report.ndcg3).dump() << ','
        << json(report.mrr).dump() << ',' << json(report.avg_questions).dump() << ',' << report.trials << ','
        << config.seed << '\n';
    return out.str();
}

}  // namespace decisive
