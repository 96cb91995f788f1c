#include "decisive/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace decisive {

namespace {

std::vector<std::string> generated_labels(const char* stem, std::size_t n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(stem) + " " + std::to_string(i + 1));
    return out;
}

double checked_total(std::span<const double> weights, const char* what) {
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!std::isfinite(weights[i]) || weights[i] < 0.0) {
            std::ostringstream msg;
            msg << what << "[" << i << "] = " << weights[i] << " is not a finite non-negative weight";
            throw ValidationError(msg.str());
        }
        total += weights[i];
    }
    if (!(total > 0.0)) throw ValidationError(std::string(what) + " has zero total weight");
    return total;
}

}  // namespace

// ---------------------------------------------------------------------------
// ScoringMatrix

ScoringMatrix::ScoringMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                             std::vector<std::string> option_labels,
                             std::vector<std::string> factor_labels)
    : rows_(rows), cols_(cols), values_(std::move(values)),
      option_labels_(std::move(option_labels)), factor_labels_(std::move(factor_labels)) {
    if (rows_ == 0 || cols_ == 0) throw DimensionError("scoring matrix needs at least one option and one factor");
    if (values_.size() != rows_ * cols_) {
        std::ostringstream msg;
        msg << "scoring matrix expects " << rows_ * cols_ << " values for " << rows_ << "x" << cols_
            << ", got " << values_.size();
        throw DimensionError(msg.str());
    }
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) {
            const double v = values_[i * cols_ + j];
            if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
                std::ostringstream msg;
                msg << "matrix[" << i << "][" << j << "] = " << v << " is outside [0, 1]";
                throw ValidationError(msg.str());
            }
        }
    }
    if (option_labels_.empty()) option_labels_ = generated_labels("option", rows_);
    if (factor_labels_.empty()) factor_labels_ = generated_labels("factor", cols_);
    if (option_labels_.size() != rows_)
        throw DimensionError("option label count " + std::to_string(option_labels_.size()) +
                             " does not match " + std::to_string(rows_) + " options");
    if (factor_labels_.size() != cols_)
        throw DimensionError("factor label count " + std::to_string(factor_labels_.size()) +
                             " does not match " + std::to_string(cols_) + " factors");
}

ScoringMatrix ScoringMatrix::from_rows(const std::vector<std::vector<double>>& rows,
                                       std::vector<std::string> option_labels,
                                       std::vector<std::string> factor_labels) {
    if (rows.empty()) throw DimensionError("scoring matrix needs at least one option");
    const std::size_t cols = rows.front().size();
    std::vector<double> values;
    values.reserve(rows.size() * cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols)
            throw DimensionError("matrix row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                                 " entries, expected " + std::to_string(cols));
        values.insert(values.end(), rows[i].begin(), rows[i].end());
    }
    return ScoringMatrix(rows.size(), cols, std::move(values), std::move(option_labels), std::move(factor_labels));
}

// ---------------------------------------------------------------------------
// PreferenceVector

PreferenceVector::PreferenceVector(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) throw DimensionError("preference vector needs at least one factor");
    const double total = checked_total(weights_, "preference");
    if (std::abs(total - 1.0) > kSumTolerance) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "preference weights sum to " << total << ", expected 1";
        throw ValidationError(msg.str());
    }
}

PreferenceVector PreferenceVector::normalized(std::vector<double> weights) {
    if (weights.empty()) throw DimensionError("preference vector needs at least one factor");
    const double total = checked_total(weights, "preference");
    for (double& w : weights) w /= total;
    return PreferenceVector(std::move(weights));
}

PreferenceVector PreferenceVector::uniform(std::size_t k) {
    if (k == 0) throw DimensionError("preference vector needs at least one factor");
    return PreferenceVector(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

// ---------------------------------------------------------------------------
// ParticleSet

ParticleSet::ParticleSet(const std::vector<PreferenceVector>& personas)
    : ParticleSet(personas, std::vector<double>(personas.size(), 1.0)) {}

ParticleSet::ParticleSet(const std::vector<PreferenceVector>& personas, std::vector<double> weights) {
    if (personas.empty()) throw ValidationError("particle set needs at least one persona");
    if (weights.size() != personas.size())
        throw DimensionError("particle set has " + std::to_string(personas.size()) + " personas but " +
                             std::to_string(weights.size()) + " weights");
    dim_ = personas.front().size();
    coords_.reserve(personas.size() * dim_);
    for (const auto& persona : personas) {
        if (persona.size() != dim_) throw DimensionError("personas do not share one dimension");
        coords_.insert(coords_.end(), persona.weights().begin(), persona.weights().end());
    }
    set_weights(std::move(weights));
}

ParticleSet ParticleSet::sample_prior(std::size_t k, std::size_t count, Rng& rng) {
    if (count == 0) throw ValidationError("particle count must be at least 1");
    std::vector<PreferenceVector> personas;
    personas.reserve(count);
    for (std::size_t p = 0; p < count; ++p) personas.push_back(sample_simplex(k, 1.0, rng));
    return ParticleSet(personas);
}

void ParticleSet::set_weights(std::vector<double> weights) {
    if (weights.size() * dim_ != coords_.size())
        throw DimensionError("weight count does not match particle count");
    const double total = checked_total(weights, "particle weight");
    for (double& w : weights) w /= total;
    weights_ = std::move(weights);
}

std::vector<double> ParticleSet::posterior_mean() const {
    std::vector<double> mean(dim_, 0.0);
    for (std::size_t p = 0; p < size(); ++p) {
        const auto w = persona(p);
        for (std::size_t j = 0; j < dim_; ++j) mean[j] += weights_[p] * w[j];
    }
    return mean;
}

// ---------------------------------------------------------------------------
// Decisions

double DecisionDistribution::confidence() const {
    return probs.empty() ? 0.0 : *std::max_element(probs.begin(), probs.end());
}

std::size_t DecisionDistribution::most_likely() const {
    return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

std::vector<double> utilities(const ScoringMatrix& matrix, std::span<const double> prefs) {
    if (prefs.size() != matrix.cols())
        throw DimensionError("preference dimension " + std::to_string(prefs.size()) + " does not match " +
                             std::to_string(matrix.cols()) + " factors");
    std::vector<double> out(matrix.rows(), 0.0);
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        const auto row = matrix.row(i);
        double u = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) u += row[j] * prefs[j];
        out[i] = u;
    }
    return out;
}

std::vector<double> utilities(const ScoringMatrix& matrix, const PreferenceVector& prefs) {
    return utilities(matrix, prefs.weights());
}

std::size_t best_option(const ScoringMatrix& matrix, std::span<const double> prefs) {
    const auto u = utilities(matrix, prefs);
    // max_element returns the first maximum.
    return static_cast<std::size_t>(std::max_element(u.begin(), u.end()) - u.begin());
}

std::size_t best_option(const ScoringMatrix& matrix, const PreferenceVector& prefs) {
    return best_option(matrix, prefs.weights());
}

std::vector<std::size_t> best_options(const ParticleSet& particles, const ScoringMatrix& matrix) {
    std::vector<std::size_t> best(particles.size());
    for (std::size_t p = 0; p < particles.size(); ++p) best[p] = best_option(matrix, particles.persona(p));
    return best;
}

DecisionDistribution decision_distribution(std::span<const std::size_t> best,
                                           std::span<const double> weights, std::size_t options) {
    if (best.empty()) throw ValidationError("decision distribution of an empty particle set");
    if (best.size() != weights.size()) throw DimensionError("best-option and weight counts differ");
    DecisionDistribution out;
    out.probs.assign(options, 0.0);
    for (std::size_t p = 0; p < best.size(); ++p) out.probs[best[p]] += weights[p];
    const double total = std::accumulate(out.probs.begin(), out.probs.end(), 0.0);
    if (!(total > 0.0)) throw NumericError("decision distribution has zero total mass");
    for (double& v : out.probs) v /= total;
    out.entropy = entropy(out.probs);
    return out;
}

DecisionDistribution decision_distribution(const ParticleSet& particles, const ScoringMatrix& matrix) {
    if (particles.size() == 0) throw ValidationError("decision distribution of an empty particle set");
    const auto best = best_options(particles, matrix);
    return decision_distribution(best, particles.weights(), matrix.rows());
}

double entropy(std::span<const double> probs) {
    double total = 0.0;
    double h = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        if (!(p >= 0.0)) throw ValidationError("entropy of a vector with negative entry at " + std::to_string(i));
        total += p;
        if (p > 0.0) h -= p * std::log(p);
    }
    if (std::abs(total - 1.0) > 1e-6) throw ValidationError("entropy input does not sum to 1");
    return std::max(h, 0.0);
}

std::vector<std::size_t> rank_descending(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

// ---------------------------------------------------------------------------
// Sampling

double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

PreferenceVector sample_simplex(std::size_t k, double alpha, Rng& rng) {
    if (k == 0) throw DimensionError("cannot sample a zero-dimensional simplex");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("Dirichlet concentration must be positive");
    std::vector<double> draws(k);
    double total = 0.0;
    if (alpha == 1.0) {
        for (double& d : draws) {
            d = -std::log1p(-uniform01(rng));
            total += d;
        }
    } else {
        std::gamma_distribution<double> gamma(alpha, 1.0);
        for (double& d : draws) {
            d = gamma(rng);
            total += d;
        }
    }
    if (!(total > 0.0)) {
        // Every draw underflowed (tiny alpha): fall back to the vertex limit.
        std::fill(draws.begin(), draws.end(), 0.0);
        draws[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(k))] = 1.0;
        return PreferenceVector(std::move(draws));
    }
    for (double& d : draws) d /= total;
    return PreferenceVector(std::move(draws));
}

}  // namespace decisive
