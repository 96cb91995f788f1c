// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "decisive/cli.hpp"
#include "decisive/elicitation.hpp"
#include "decisive/metrics.hpp"
#include "decisive/sim.hpp"
#include "oracle.hpp"

using namespace decisive;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
    if (!ok) ++failures;
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::size_t between(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng() % (hi - lo + 1); }

ScoringMatrix random_grid_matrix(std::size_t m, std::size_t k, Rng& rng) {
    std::vector<double> v(m * k);
    for (double& x : v) x = static_cast<double>(rng() % 8) / 7.0;
    return ScoringMatrix(m, k, std::move(v));
}

ParticleSet random_particles(std::size_t k, std::size_t p, Rng& rng) {
    std::vector<PreferenceVector> personas;
    std::vector<double> weights;
    for (std::size_t i = 0; i < p; ++i) {
        personas.push_back(sample_simplex(k, 1.0, rng));
        weights.push_back(0.05 + uniform01(rng));
    }
    return ParticleSet(std::move(personas), std::move(weights));
}

void martingale_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(101);
    double worst_identity = 0.0, min_eig = 1e300;
    std::size_t eig_evaluations = 0;
    for (int inst = 0; inst < 1000; ++inst) {
        const std::size_t m = between(rng, 2, 10), k = between(rng, 2, 12), p = between(rng, 10, 200);
        const auto s = inst % 2 ? random_grid_matrix(m, k, rng) : [&] {
            std::vector<double> v(m * k);
            for (double& x : v) x = uniform01(rng);
            return ScoringMatrix(m, k, std::move(v));
        }();
        const auto particles = random_particles(k, p, rng);
        const double kappa = std::vector<double>{1.0, 10.0, 20.0, 50.0}[inst % 4];
        const auto chi = decision_distribution(particles, s);

        for (const auto& q : all_questions(k)) {
            const auto pred = predictive_response_probs(particles, q, kappa);
            const auto chi_a = decision_distribution(update(particles, q, Response::PreferA, kappa), s);
            const auto chi_b = decision_distribution(update(particles, q, Response::PreferB, kappa), s);
            for (std::size_t i = 0; i < m; ++i)
                worst_identity = std::max(
                    worst_identity, std::abs(pred.prefer_a * chi_a.probs[i] + pred.prefer_b * chi_b.probs[i] - chi.probs[i]));
            min_eig = std::min(min_eig, expected_information_gain(particles, s, q, kappa));
            ++eig_evaluations;
        }
    }
    const double secs = seconds_since(t0);
    report(worst_identity <= 1e-9 && min_eig >= -1e-12 && secs < 60, "martingale/EIG suite",
           "1000 instances, " + std::to_string(eig_evaluations) + " pairs, max |p_A chi_A + p_B chi_B - chi| = " +
               sci(worst_identity) + ", min EIG = " + sci(min_eig) + ", " + fmt(secs, 1) + " s");
}

void brute_force_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(202);
    int agree = 0;
    for (int inst = 0; inst < 200; ++inst) {
        const std::size_t m = between(rng, 2, 4), k = between(rng, 2, 3), p = between(rng, 1, 50);
        const auto s = random_grid_matrix(m, k, rng);
        const auto particles = random_particles(k, p, rng);

        oracle::Matrix om(m, std::vector<double>(k));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < k; ++j) om[i][j] = s(i, j);
        oracle::Personas op;
        std::vector<double> ow;
        for (std::size_t i = 0; i < p; ++i) {
            const auto w = particles.persona(i);
            op.emplace_back(w.begin(), w.end());
            ow.push_back(particles.weight(i));
        }

        ElicitationConfig cfg;
        cfg.kappa = std::vector<double>{2.0, 10.0, 20.0}[inst % 3];
        cfg.tau = 1.0;
        const SessionState state(s, particles, cfg);
        const auto mine = select_question(state);
        const auto theirs = oracle::best_pair(om, op, ow, cfg.kappa);
        const bool same = (!mine && !theirs) ||
                          (mine && theirs && mine->factor_a == theirs->first && mine->factor_b == theirs->second);
        agree += same;
    }
    const double secs = seconds_since(t0);
    report(agree == 200 && secs < 60, "brute-force oracle",
           std::to_string(agree) + "/200 selections match exhaustive search, " + fmt(secs, 2) + " s");
}

void posterior_consistency() {
    Rng rng(303);
    int monotone = 0, normalized = 0;
    double worst_drop = 0.0;
    for (int inst = 0; inst < 1000; ++inst) {
        const std::size_t k = between(rng, 2, 12), p = between(rng, 10, 200);
        const auto particles = random_particles(k, p, rng);
        const std::size_t a = rng() % k;
        std::size_t b = rng() % (k - 1);
        if (b >= a) ++b;
        const auto q = Question::make(a, b);
        const double kappa = 0.5 + 50.0 * uniform01(rng);

        auto mean_gap = [&](const ParticleSet& ps) {
            double g = 0.0;
            for (std::size_t i = 0; i < ps.size(); ++i) g += ps.weight(i) * (ps.persona(i)[q.factor_a] - ps.persona(i)[q.factor_b]);
            return g;
        };
        const auto post = update(particles, q, Response::PreferA, kappa);
        const double drop = mean_gap(particles) - mean_gap(post);
        worst_drop = std::max(worst_drop, drop);
        monotone += drop <= 1e-12;

        double total = 0.0;
        bool positive = true;
        for (double w : post.weights()) {
            total += w;
            positive = positive && w > 0.0;
        }
        normalized += positive && std::abs(total - 1.0) <= 1e-9;
    }
    report(monotone == 1000 && normalized == 1000, "posterior consistency",
           std::to_string(monotone) + "/1000 non-decreasing mean gap (worst drop " + sci(worst_drop) +
               "), " + std::to_string(normalized) + "/1000 positive and normalized");
}

TrialConfig table_config(std::size_t options, std::size_t profiles, UserMode user) {
    TrialConfig c;
    c.source = SyntheticSource{options, 11};
    c.trials = 500;
    c.seed = 2026;
    c.jobs = 0;
    c.elicitation.tau = 0.85;
    c.elicitation.particle_count = profiles;
    c.user = user;
    return c;
}

std::string summary(const MetricsReport& r) {
    return "top1 " + fmt(r.top1 * 100, 1) + ", top2 " + fmt(r.top2 * 100, 1) + ", ndcg3 " + fmt(r.ndcg3, 3) +
           ", mrr " + fmt(r.mrr, 3) + ", avg q " + fmt(r.avg_questions, 2);
}

void stopping_soundness(const std::vector<const TrialsResult*>& runs) {
    std::size_t checked = 0, sound = 0;
    for (const auto* run : runs) {
        for (const auto& t : run->trials) {
            ++checked;
            const bool ok = t.stop_reason == StopReason::ConfidenceReached ? t.final_confidence >= 0.85
                                                                          : t.outcome.questions <= t.question_budget;
            sound += ok;
        }
    }

    // After termination a session refuses further answers.
    Rng rng(404);
    int rejected = 0;
    const int sessions = 100;
    for (int i = 0; i < sessions; ++i) {
        const auto s = random_grid_matrix(between(rng, 2, 10), between(rng, 2, 8), rng);
        ElicitationConfig cfg;
        cfg.particle_count = 100;
        auto state = SessionState::start(s, cfg, rng);
        const SimulatedUser user{sample_simplex(s.cols(), 1.0, rng), DeterministicUser{}};
        Rng responder(i);
        run_session(state, [&](const Question& q) { return simulate_response(user, q, responder); });
        try {
            state.record(Question{0, 1}, Response::PreferA);
        } catch (const SessionStoppedError&) {
            ++rejected;
        }
    }
    report(sound == checked && rejected == sessions, "stopping soundness",
           std::to_string(sound) + "/" + std::to_string(checked) +
               " transcripts end at max chi >= 0.85 or on budget/pool exhaustion; " + std::to_string(rejected) + "/" +
               std::to_string(sessions) + " stopped sessions reject updates");
}

void metric_units() {
    using R = std::vector<std::size_t>;
    const R truth{0, 1, 2, 3, 4};
    bool ok = true;
    ok = ok && ndcg_at_3(truth, truth) == 1.0;
    ok = ok && std::abs(ndcg_at_3(R{1, 0, 2, 3, 4}, truth) - 0.9224945116765986) < 1e-12;
    ok = ok && ndcg_at_3(R{3, 4, 5, 0, 1, 2}, R{0, 1, 2, 3, 4, 5}) == 0.0;
    ok = ok && reciprocal_rank(R{2, 0, 3, 1}, 2) == 1.0;
    ok = ok && reciprocal_rank(R{2, 0, 3, 1}, 0) == 0.5;
    ok = ok && reciprocal_rank(R{2, 0, 3, 1}, 1) == 0.25;
    ok = ok && top_k_hit(truth, 0, 1) == 1;
    ok = ok && top_k_hit(R{1, 0, 2}, 0, 1) == 0 && top_k_hit(R{1, 0, 2}, 0, 2) == 1;
    ok = ok && top_k_hit(R{2, 1, 0}, 0, 3) == 1 && top_k_hit(R{2, 1, 0}, 0, 7) == 1;

    const std::vector<TrialOutcome> two{{1, 1, 1.0, 1.0, 2}, {0, 1, 0.5, 0.5, 4}};
    const auto agg = aggregate(two);
    ok = ok && agg.top1 == 0.5 && agg.avg_questions == 3.0 && agg.trials == 2;
    report(ok, "metric units", "NDCG@3 swap fixture 0.9224945116765986, MRR 1/0.5/0.25, top-k and aggregate fixtures");
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

void determinism() {
    const auto dir = std::filesystem::temp_directory_path() / "decisive_acceptance_determinism";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    auto run = [&](const std::string& base) {
        std::istringstream in;
        std::ostringstream out, err;
        return run_cli({"simulate", "--synthetic", "10,11", "--profiles", "500", "--trials", "60", "--seed", "7",
                        "--jobs", "0", "--temperature", "0.05", "--out", (dir / base).string()},
                       in, out, err);
    };
    const int c1 = run("first"), c2 = run("second");
    const auto j1 = read_file(dir / "first.json"), j2 = read_file(dir / "second.json");
    const auto v1 = read_file(dir / "first.csv"), v2 = read_file(dir / "second.csv");
    const bool ok = c1 == 0 && c2 == 0 && !j1.empty() && j1 == j2 && !v1.empty() && v1 == v2;
    report(ok, "determinism",
           "two simulate runs with seed 7: JSON " + std::string(j1 == j2 ? "identical" : "differs") + " (" +
               std::to_string(j1.size()) + " bytes), CSV " + (v1 == v2 ? "identical" : "differs"));
    std::filesystem::remove_all(dir);
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();

    martingale_suite();
    brute_force_suite();
    posterior_consistency();

    const auto t_tables = std::chrono::steady_clock::now();
    const auto p500 = run_trials(table_config(10, 500, DeterministicUser{}));
    const auto p10 = run_trials(table_config(10, 10, DeterministicUser{}));
    const double table2_secs = seconds_since(t_tables);
    const double gap = p500.report.top1 - p10.report.top1;
    report(gap >= 0.05 && p500.mean_session_seconds < 2.0 && table2_secs < 600, "profile-count ablation",
           "P=500 " + summary(p500.report) + " | P=10 " + summary(p10.report) + " | gap " + fmt(gap * 100, 1) +
               " points (need >= 5), " + fmt(p500.mean_session_seconds, 4) + " s per session at P=500, run " +
               fmt(table2_secs, 1) + " s");

    const auto t_noise = std::chrono::steady_clock::now();
    const auto noisy = run_trials(table_config(10, 500, BradleyTerryUser{0.05}));
    const double noise_secs = seconds_since(t_noise);
    const double drop1 = p500.report.top1 - noisy.report.top1;
    const double drop2 = p500.report.top2 - noisy.report.top2;
    report(drop1 <= 0.06 && drop2 <= 0.03 && noise_secs < 600, "noise ablation",
           "Bradley-Terry T=0.05 " + summary(noisy.report) + " | top1 drop " + fmt(drop1 * 100, 1) +
               " points (need <= 6), top2 drop " + fmt(drop2 * 100, 1) + " points (need <= 3)");

    std::size_t over_budget = 0;
    for (const auto& t : p500.trials) over_budget += t.outcome.questions > t.question_budget;
    const double mean_q = p500.report.avg_questions;
    report(mean_q >= 1.0 && mean_q <= 12.0 && over_budget == 0, "question efficiency",
           "mean questions " + fmt(mean_q, 2) + " (need [1, 12]), " + std::to_string(over_budget) +
               " sessions over budget");

    stopping_soundness({&p500, &p10, &noisy});
    metric_units();
    determinism();

    const auto m5 = run_trials(table_config(5, 500, DeterministicUser{}));
    report(m5.report.avg_questions <= p500.report.avg_questions + 1.0, "candidate set size (M=5)",
           "M=5 " + summary(m5.report) + " | mean questions " + fmt(m5.report.avg_questions, 2) + " vs M=10 " +
               fmt(mean_q, 2) + " (need <= M=10 + 1)");

    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << " in "
              << fmt(seconds_since(t0), 1) << " s" << std::endl;
    return failures == 0 ? 0 : 1;
}
