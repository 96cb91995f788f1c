#include "doctest.h"

#include <cmath>
#include <numeric>

#include "decisive/elicitation.hpp"
#include "oracle.hpp"

using namespace decisive;

namespace {

struct Instance {
    ScoringMatrix matrix;
    ParticleSet particles;
};

Instance random_instance(Rng& rng, std::size_t max_m, std::size_t max_k, std::size_t max_p, bool random_weights) {
    const std::size_t m = 2 + rng() % (max_m - 1);
    const std::size_t k = 2 + rng() % (max_k - 1);
    const std::size_t p = 1 + rng() % max_p;
    std::vector<double> values(m * k);
    for (double& v : values) v = static_cast<double>(rng() % 8) / 7.0;
    std::vector<PreferenceVector> personas;
    std::vector<double> weights;
    for (std::size_t i = 0; i < p; ++i) {
        personas.push_back(sample_simplex(k, 1.0, rng));
        weights.push_back(random_weights ? 0.01 + uniform01(rng) : 1.0);
    }
    return {ScoringMatrix(m, k, std::move(values)), ParticleSet(personas, weights)};
}

oracle::Matrix to_rows(const ScoringMatrix& s) {
    oracle::Matrix rows(s.rows());
    for (std::size_t i = 0; i < s.rows(); ++i) rows[i].assign(s.row(i).begin(), s.row(i).end());
    return rows;
}

oracle::Personas to_personas(const ParticleSet& ps) {
    oracle::Personas out(ps.size());
    for (std::size_t p = 0; p < ps.size(); ++p) out[p].assign(ps.persona(p).begin(), ps.persona(p).end());
    return out;
}

const ScoringMatrix kIdentity2 = ScoringMatrix::from_rows({{1, 0}, {0, 1}});

}  // namespace

TEST_CASE("question canonical form") {
    CHECK(Question::make(3, 1) == Question{1, 3});
    CHECK_THROWS_AS(Question::make(2, 2), ValidationError);
    CHECK(all_questions(1).empty());
    CHECK(all_questions(4).size() == 6);
    CHECK(all_questions(3) == std::vector<Question>{{0, 1}, {0, 2}, {1, 2}});
}

TEST_CASE("response and stop reason names round-trip") {
    for (auto r : {Response::PreferA, Response::PreferB, Response::Neutral, Response::BothImportant})
        CHECK(parse_response(to_string(r)) == r);
    CHECK_FALSE(parse_response("maybe"));
    for (auto r : {StopReason::ConfidenceReached, StopReason::BudgetExhausted, StopReason::NoQuestionsLeft})
        CHECK(parse_stop_reason(to_string(r)) == r);
}

TEST_CASE("response likelihood") {
    const std::vector<double> tied{0.4, 0.4, 0.2};
    for (double kappa : {0.5, 10.0, 80.0}) {
        CHECK(response_likelihood(tied, {0, 1}, Response::PreferA, kappa) == 0.5);
        CHECK(response_likelihood(tied, {0, 1}, Response::Neutral, kappa) == 1.0);
    }
    const std::vector<double> w{0.8, 0.2};
    CHECK(response_likelihood(w, {0, 1}, Response::PreferA, 10.0) == doctest::Approx(0.9975273768433653).epsilon(1e-12));
    CHECK(response_likelihood(w, {0, 1}, Response::PreferB, 10.0) ==
          doctest::Approx(0.0024726231566347743).epsilon(1e-12));
    // Neutral peaks at equal weights and stays in (0, 1].
    const double neutral = response_likelihood(w, {0, 1}, Response::Neutral, 10.0);
    CHECK(neutral > 0.0);
    CHECK(neutral < 1.0);
    // BothImportant favours personas weighting both factors above 1/K.
    const std::vector<double> both_high{0.45, 0.45, 0.1};
    const std::vector<double> one_low{0.8, 0.05, 0.15};
    CHECK(response_likelihood(both_high, {0, 1}, Response::BothImportant, 10.0) >
          response_likelihood(one_low, {0, 1}, Response::BothImportant, 10.0));
    CHECK_THROWS_AS(response_likelihood(w, {0, 2}, Response::PreferA, 10.0), ValidationError);
    CHECK_THROWS_AS(response_likelihood(w, {1, 0}, Response::PreferA, 10.0), ValidationError);
}

TEST_CASE("update") {
    ParticleSet two({PreferenceVector({0.8, 0.2}), PreferenceVector({0.2, 0.8})});
    const auto post = update(two, {0, 1}, Response::PreferA, 10.0);
    CHECK(post.weight(0) == doctest::Approx(0.9975273768433651).epsilon(1e-12));
    CHECK(post.weight(1) == doctest::Approx(0.002472623156634774).epsilon(1e-12));
    CHECK(post.persona(0)[0] == 0.8);
    CHECK(two.weight(0) == 0.5);  // input untouched

    ParticleSet tied({PreferenceVector({0.3, 0.3, 0.4}), PreferenceVector({0.1, 0.1, 0.8})}, {0.25, 0.75});
    const auto same = update(tied, {0, 1}, Response::Neutral, 10.0);
    CHECK(same.weight(0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(same.weight(1) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("update never eliminates a persona") {
    ParticleSet two({PreferenceVector({1.0, 0.0}), PreferenceVector({0.0, 1.0})});
    ElicitationConfig cfg;
    auto ps = two;
    for (int i = 0; i < 5; ++i) update_in_place(ps, {0, 1}, Response::PreferA, 600.0);
    CHECK(ps.weight(1) > 0.0);
    CHECK(std::abs(ps.weight(0) + ps.weight(1) - 1.0) < 1e-9);
}

TEST_CASE("predictive response probabilities") {
    ParticleSet symmetric({PreferenceVector({0.7, 0.3}), PreferenceVector({0.3, 0.7})});
    const auto sym = predictive_response_probs(symmetric, {0, 1}, 10.0);
    CHECK(sym.prefer_a == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(sym.prefer_a + sym.prefer_b == 1.0);

    ParticleSet single({PreferenceVector({0.8, 0.2})});
    const auto one = predictive_response_probs(single, {0, 1}, 10.0);
    CHECK(one.prefer_a == doctest::Approx(0.9975273768433653).epsilon(1e-12));
    CHECK(one.prefer_b == doctest::Approx(0.0024726231566347).epsilon(1e-9));
}

TEST_CASE("expected information gain") {
    ParticleSet agree({PreferenceVector({0.8, 0.1, 0.1}), PreferenceVector({0.6, 0.2, 0.2})});
    const auto s = ScoringMatrix::from_rows({{1, 0, 0}, {0, 1, 0}});
    for (auto q : all_questions(3)) CHECK(expected_information_gain(agree, s, q, 10.0) == 0.0);

    ParticleSet split({PreferenceVector({0.9, 0.1}), PreferenceVector({0.1, 0.9})});
    const double g = expected_information_gain(split, kIdentity2, {0, 1}, 10.0);
    CHECK(std::abs(g - std::log(2.0)) < 0.01);
    CHECK(g == doctest::Approx(0.6901289731433182).epsilon(1e-10));
}

TEST_CASE("property: martingale identity and non-negative EIG") {
    Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const auto inst = random_instance(rng, 10, 12, 200, true);
        const auto chi = decision_distribution(inst.particles, inst.matrix);
        for (auto q : all_questions(inst.matrix.cols())) {
            const auto pred = predictive_response_probs(inst.particles, q, 10.0);
            const auto chi_a = decision_distribution(update(inst.particles, q, Response::PreferA, 10.0), inst.matrix);
            const auto chi_b = decision_distribution(update(inst.particles, q, Response::PreferB, 10.0), inst.matrix);
            for (std::size_t i = 0; i < chi.probs.size(); ++i)
                REQUIRE(std::abs(pred.prefer_a * chi_a.probs[i] + pred.prefer_b * chi_b.probs[i] - chi.probs[i]) <
                        1e-9);
            REQUIRE(expected_information_gain(inst.particles, inst.matrix, q, 10.0) >= -1e-12);
        }
    }
}

TEST_CASE("property: PreferA moves the posterior mean gap towards a") {
    Rng rng(77);
    for (int trial = 0; trial < 500; ++trial) {
        const auto inst = random_instance(rng, 4, 12, 100, true);
        const auto qs = all_questions(inst.matrix.cols());
        const auto q = qs[rng() % qs.size()];
        const auto before = inst.particles.posterior_mean();
        const auto post = update(inst.particles, q, Response::PreferA, 1.0 + 30.0 * uniform01(rng));
        const auto after = post.posterior_mean();
        REQUIRE(after[q.factor_a] - after[q.factor_b] >= before[q.factor_a] - before[q.factor_b] - 1e-12);
        double total = 0.0;
        for (std::size_t p = 0; p < post.size(); ++p) {
            REQUIRE(post.weight(p) > 0.0);
            REQUIRE(post.persona(p)[0] == inst.particles.persona(p)[0]);
            total += post.weight(p);
        }
        REQUIRE(std::abs(total - 1.0) < 1e-9);
    }
}

TEST_CASE("property: scaling prior weights does not change the posterior") {
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const auto inst = random_instance(rng, 4, 8, 40, true);
        auto scaled = inst.particles;
        auto w = scaled.weights();
        const double c = 0.001 + 50.0 * uniform01(rng);
        for (double& x : w) x *= c;
        scaled.set_weights(w);
        const Question q{0, 1};
        const auto a = update(inst.particles, q, Response::PreferB, 10.0);
        const auto b = update(scaled, q, Response::PreferB, 10.0);
        for (std::size_t p = 0; p < a.size(); ++p) REQUIRE(std::abs(a.weight(p) - b.weight(p)) < 1e-12);
    }
}

TEST_CASE("select_question edge cases") {
    ElicitationConfig cfg;
    cfg.tau = 1.0;
    Rng rng(3);
    auto single_factor = SessionState::start(ScoringMatrix::from_rows({{0.2}, {0.9}}), cfg, rng);
    CHECK_FALSE(select_question(single_factor).has_value());
    CHECK(should_stop(single_factor) == StopReason::NoQuestionsLeft);
    CHECK(single_factor.stop_reason() == StopReason::NoQuestionsLeft);

    cfg.max_questions = 10;
    const auto s = ScoringMatrix::from_rows({{0.9, 0.1, 0.5}, {0.1, 0.9, 0.5}, {0.5, 0.5, 0.9}});
    auto state = SessionState::start(s, cfg, rng);
    for (auto q : all_questions(3)) {
        REQUIRE(state.active());
        state.record(q, Response::Neutral);
    }
    CHECK(state.eligible_questions().empty());
    CHECK_FALSE(select_question(state).has_value());
    CHECK(state.stop_reason() == StopReason::NoQuestionsLeft);
}

TEST_CASE("select_question matches brute force on tiny instances") {
    Rng rng(31337);
    for (int trial = 0; trial < 200; ++trial) {
        auto inst = random_instance(rng, 4, 3, 50, trial % 2 == 0);
        ElicitationConfig cfg;
        cfg.tau = 1.0;
        SessionState state(inst.matrix, inst.particles, cfg);
        const auto expected = oracle::best_pair(to_rows(inst.matrix), to_personas(inst.particles),
                                                inst.particles.weights(), cfg.kappa);
        const auto got = select_question(state);
        REQUIRE(got.has_value());
        REQUIRE(expected.has_value());
        CHECK(got->factor_a == expected->first);
        CHECK(got->factor_b == expected->second);
    }
}

TEST_CASE("should_stop priorities") {
    ParticleSet confident({PreferenceVector({0.9, 0.1}), PreferenceVector({0.2, 0.8})}, {0.9, 0.1});
    SessionState s(kIdentity2, confident, ElicitationConfig{});
    CHECK(should_stop(s) == StopReason::ConfidenceReached);
    CHECK_THROWS_AS(s.record({0, 1}, Response::PreferA), SessionStoppedError);

    const auto s10 = ScoringMatrix::from_rows({{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}});
    std::vector<PreferenceVector> personas;
    for (std::size_t i = 0; i < 4; ++i) {
        std::vector<double> w(4, 0.1);
        w[i] = 0.7;
        personas.push_back(PreferenceVector(w));
    }
    ElicitationConfig cfg;
    SessionState uniform(s10, ParticleSet(personas), cfg);
    CHECK_FALSE(should_stop(uniform).has_value());

    cfg.max_questions = 0;
    SessionState no_budget(s10, ParticleSet(personas), cfg);
    CHECK(should_stop(no_budget) == StopReason::BudgetExhausted);
}

TEST_CASE("recommend") {
    const auto s = ScoringMatrix::from_rows({{0.8, 0.2}, {0.4, 0.9}, {0.5, 0.5}});
    ParticleSet single({PreferenceVector({0.6, 0.4})});
    CHECK(recommend(single, s) == std::vector<std::size_t>{1, 0, 2});

    ParticleSet centre({PreferenceVector::uniform(2), PreferenceVector::uniform(2)});
    // Row means 0.5, 0.65, 0.5.
    CHECK(recommend(centre, s) == std::vector<std::size_t>{1, 0, 2});

    ParticleSet four({PreferenceVector({0.9, 0.1}), PreferenceVector({0.8, 0.2}), PreferenceVector({0.2, 0.8}),
                      PreferenceVector({0.5, 0.5})},
                     {0.4, 0.3, 0.2, 0.1});
    const auto eu = expected_utilities(four, s);
    CHECK(eu[0] == doctest::Approx(0.614).epsilon(1e-12));
    CHECK(eu[1] == doctest::Approx(0.555).epsilon(1e-12));
    CHECK(eu[2] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(recommend(four, s) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("run_session") {
    const auto s = ScoringMatrix::from_rows({{0.9, 0.1, 0.3}, {0.2, 0.8, 0.6}, {0.5, 0.5, 0.9}, {0.6, 0.6, 0.1}});
    const auto responder = [](const Question& q) { return q.factor_a == 0 ? Response::PreferA : Response::PreferB; };

    ElicitationConfig immediate;
    immediate.tau = 0.0;
    Rng rng(1);
    const auto r0 = run_session(s, responder, immediate, rng);
    CHECK(r0.question_count == 0);
    CHECK(r0.stop_reason == StopReason::ConfidenceReached);
    CHECK(r0.ranking.size() == 4);

    ElicitationConfig no_budget;
    no_budget.max_questions = 0;
    Rng rng2(1);
    const auto r1 = run_session(s, responder, no_budget, rng2);
    CHECK(r1.question_count == 0);
    CHECK(r1.stop_reason == StopReason::BudgetExhausted);

    ElicitationConfig cfg;
    cfg.particle_count = 200;
    Rng a(17), b(17);
    const auto ra = run_session(s, responder, cfg, a);
    const auto rb = run_session(s, responder, cfg, b);
    CHECK(ra.transcript == rb.transcript);
    CHECK(ra.ranking == rb.ranking);
    CHECK(ra.question_count <= cfg.question_budget(3));
    if (ra.stop_reason == StopReason::ConfidenceReached) CHECK(ra.final_decision.confidence() >= cfg.tau);

    int calls = 0;
    const Responder failing = [&](const Question&) -> Response {
        if (++calls == 2) throw std::runtime_error("user left");
        return Response::PreferA;
    };
    ElicitationConfig strict;
    strict.tau = 1.0;
    Rng c(5);
    try {
        run_session(s, failing, strict, c);
        FAIL("expected SessionAborted");
    } catch (const SessionAborted& e) {
        CHECK(e.transcript().size() == 1);
        CHECK(std::string(e.what()).find("user left") != std::string::npos);
    }
}

TEST_CASE("session rejects repeats and bad pairs") {
    ElicitationConfig cfg;
    cfg.tau = 1.0;
    Rng rng(8);
    auto state = SessionState::start(ScoringMatrix::from_rows({{0.9, 0.1, 0.4}, {0.1, 0.9, 0.4}}), cfg, rng);
    state.record({0, 1}, Response::PreferA);
    CHECK_THROWS_AS(state.record({0, 1}, Response::PreferA), ValidationError);
    CHECK_THROWS_AS(state.record({1, 3}, Response::PreferA), ValidationError);

    cfg.allow_repeat_questions = true;
    cfg.max_questions = 5;
    auto repeat = SessionState::start(ScoringMatrix::from_rows({{0.9, 0.1}, {0.1, 0.9}}), cfg, rng);
    repeat.record({0, 1}, Response::PreferA);
    CHECK_NOTHROW(repeat.record({0, 1}, Response::PreferA));
    CHECK(repeat.questions_asked() == 2);
}

TEST_CASE("config validation and default budget") {
    ElicitationConfig cfg;
    CHECK(cfg.question_budget(11) == 20);
    CHECK(cfg.question_budget(4) == 6);
    CHECK(cfg.question_budget(1) == 0);
    cfg.kappa = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.kappa = 10.0;
    cfg.tau = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
