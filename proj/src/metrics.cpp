#include "decisive/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace decisive {

namespace {

void check_permutation(std::span<const std::size_t> ranking, const char* what) {
    std::vector<bool> seen(ranking.size(), false);
    for (auto v : ranking) {
        if (v >= ranking.size() || seen[v]) throw RankingError(std::string(what) + " is not a permutation of options");
        seen[v] = true;
    }
}

std::size_t position_of(std::span<const std::size_t> ranking, std::size_t option) {
    const auto it = std::find(ranking.begin(), ranking.end(), option);
    if (it == ranking.end()) throw RankingError("option " + std::to_string(option) + " is absent from the ranking");
    return static_cast<std::size_t>(it - ranking.begin());
}

}  // namespace

int top_k_hit(std::span<const std::size_t> predicted, std::size_t true_best, std::size_t k) {
    if (k == 0) throw RankingError("k must be at least 1");
    check_permutation(predicted, "predicted ranking");
    return position_of(predicted, true_best) < k ? 1 : 0;
}

double reciprocal_rank(std::span<const std::size_t> predicted, std::size_t true_best) {
    check_permutation(predicted, "predicted ranking");
    return 1.0 / static_cast<double>(position_of(predicted, true_best) + 1);
}

double ndcg_at_3(std::span<const std::size_t> predicted, std::span<const std::size_t> true_ranking,
                 const NdcgGains& gains) {
    check_permutation(predicted, "predicted ranking");
    check_permutation(true_ranking, "true ranking");
    if (predicted.size() != true_ranking.size()) throw RankingError("rankings cover different option sets");

    const auto gain_of = [&](std::size_t option) {
        for (std::size_t r = 0; r < 3 && r < true_ranking.size(); ++r)
            if (true_ranking[r] == option) return gains.grades[r];
        return 0.0;
    };
    double dcg = 0.0;
    double ideal = 0.0;
    for (std::size_t pos = 0; pos < 3 && pos < predicted.size(); ++pos) {
        const double discount = std::log2(static_cast<double>(pos) + 2.0);
        dcg += gain_of(predicted[pos]) / discount;
        ideal += gains.grades[pos] / discount;
    }
    return ideal > 0.0 ? dcg / ideal : 0.0;
}

TrialOutcome score_trial(std::span<const std::size_t> predicted, std::span<const std::size_t> true_ranking,
                         std::size_t questions, const NdcgGains& gains) {
    if (true_ranking.empty()) throw RankingError("empty ranking");
    const std::size_t best = true_ranking.front();
    TrialOutcome t;
    t.top1 = top_k_hit(predicted, best, 1);
    t.top2 = top_k_hit(predicted, best, 2);
    t.ndcg3 = ndcg_at_3(predicted, true_ranking, gains);
    t.mrr = reciprocal_rank(predicted, best);
    t.questions = questions;
    return t;
}

MetricsReport aggregate(std::span<const TrialOutcome> outcomes) {
    if (outcomes.empty()) throw std::invalid_argument("cannot aggregate zero trials");
    MetricsReport r;
    for (const auto& t : outcomes) {
        r.top1 += t.top1;
        r.top2 += t.top2;
        r.ndcg3 += t.ndcg3;
        r.mrr += t.mrr;
        r.avg_questions += static_cast<double>(t.questions);
    }
    const double n = static_cast<double>(outcomes.size());
    r.top1 /= n;
    r.top2 /= n;
    r.ndcg3 /= n;
    r.mrr /= n;
    r.avg_questions /= n;
    r.trials = outcomes.size();
    return r;
}

}  // namespace decisive
