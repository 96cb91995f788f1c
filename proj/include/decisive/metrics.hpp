#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace decisive {

class RankingError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// 1 when `true_best` sits within the first k entries of `predicted`.
int top_k_hit(std::span<const std::size_t> predicted, std::size_t true_best, std::size_t k);

/// 1 / (1-based position of `true_best`).
double reciprocal_rank(std::span<const std::size_t> predicted, std::size_t true_best);

/// Relevance grades for the true top-3 (1st, 2nd, 3rd); everything else has gain 0.
struct NdcgGains {
    std::array<double, 3> grades{3.0, 2.0, 1.0};
};

double ndcg_at_3(std::span<const std::size_t> predicted, std::span<const std::size_t> true_ranking,
                 const NdcgGains& gains = {});

struct TrialOutcome {
    int top1 = 0;
    int top2 = 0;
    double ndcg3 = 0.0;
    double mrr = 0.0;
    std::size_t questions = 0;
};

/// Scores one predicted ranking against the ground-truth ranking.
TrialOutcome score_trial(std::span<const std::size_t> predicted, std::span<const std::size_t> true_ranking,
                         std::size_t questions, const NdcgGains& gains = {});

struct MetricsReport {
    double top1 = 0.0;
    double top2 = 0.0;
    double ndcg3 = 0.0;
    double mrr = 0.0;
    double avg_questions = 0.0;
    std::size_t trials = 0;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Arithmetic means over trials; throws on empty input.
MetricsReport aggregate(std::span<const TrialOutcome> outcomes);

}  // namespace decisive
