#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace decisive {

/// All randomness in the engine flows through a caller-owned generator of this type.
using Rng = std::mt19937_64;

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// M x K option-on-factor scores, each in [0, 1], stored row-major.
class ScoringMatrix {
public:
    /// Empty label lists are replaced by generated names ("option 1", "factor 1", ...).
    ScoringMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                  std::vector<std::string> option_labels = {},
                  std::vector<std::string> factor_labels = {});

    static ScoringMatrix from_rows(const std::vector<std::vector<double>>& rows,
                                   std::vector<std::string> option_labels = {},
                                   std::vector<std::string> factor_labels = {});

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double operator()(std::size_t option, std::size_t factor) const { return values_[option * cols_ + factor]; }
    std::span<const double> row(std::size_t option) const {
        return {values_.data() + option * cols_, cols_};
    }
    const std::vector<double>& values() const { return values_; }
    const std::vector<std::string>& option_labels() const { return option_labels_; }
    const std::vector<std::string>& factor_labels() const { return factor_labels_; }

    friend bool operator==(const ScoringMatrix&, const ScoringMatrix&) = default;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> values_;
    std::vector<std::string> option_labels_;
    std::vector<std::string> factor_labels_;
};

/// Non-negative factor weights summing to one.
class PreferenceVector {
public:
    static constexpr double kSumTolerance = 1e-9;

    explicit PreferenceVector(std::vector<double> weights);

    /// Scales arbitrary non-negative weights (not all zero) onto the simplex.
    static PreferenceVector normalized(std::vector<double> weights);
    static PreferenceVector uniform(std::size_t k);

    std::size_t size() const { return weights_.size(); }
    double operator[](std::size_t i) const { return weights_[i]; }
    std::span<const double> weights() const { return weights_; }

    friend bool operator==(const PreferenceVector&, const PreferenceVector&) = default;

private:
    std::vector<double> weights_;
};

/// Weighted personas approximating the posterior over preference vectors.
/// Persona coordinates are stored contiguously (P x K).
class ParticleSet {
public:
    /// Equal initial weights 1/P.
    explicit ParticleSet(const std::vector<PreferenceVector>& personas);
    /// Weights must be non-negative with a positive sum; they are renormalized.
    ParticleSet(const std::vector<PreferenceVector>& personas, std::vector<double> weights);

    /// P personas drawn from the uniform Dirichlet prior over the K-simplex.
    static ParticleSet sample_prior(std::size_t k, std::size_t count, Rng& rng);

    std::size_t size() const { return weights_.size(); }
    std::size_t dimension() const { return dim_; }
    std::span<const double> persona(std::size_t p) const { return {coords_.data() + p * dim_, dim_}; }
    double weight(std::size_t p) const { return weights_[p]; }
    const std::vector<double>& weights() const { return weights_; }

    /// Same contract as the weighted constructor.
    void set_weights(std::vector<double> weights);

    /// Weighted mean persona.
    std::vector<double> posterior_mean() const;

    friend bool operator==(const ParticleSet&, const ParticleSet&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<double> coords_;
    std::vector<double> weights_;
};

struct DecisionDistribution {
    std::vector<double> probs;
    double entropy = 0.0;

    double confidence() const;
    std::size_t most_likely() const;
};

std::vector<double> utilities(const ScoringMatrix& matrix, std::span<const double> prefs);
std::vector<double> utilities(const ScoringMatrix& matrix, const PreferenceVector& prefs);

/// Argmax of utilities; ties go to the lowest index.
std::size_t best_option(const ScoringMatrix& matrix, std::span<const double> prefs);
std::size_t best_option(const ScoringMatrix& matrix, const PreferenceVector& prefs);

/// Best option of every persona, in particle order.
std::vector<std::size_t> best_options(const ParticleSet& particles, const ScoringMatrix& matrix);

DecisionDistribution decision_distribution(const ParticleSet& particles, const ScoringMatrix& matrix);

/// Mass per option given each persona's best option and weight. Normalized by the
/// accumulated mass so a single occupied bin is exactly 1.
DecisionDistribution decision_distribution(std::span<const std::size_t> best,
                                           std::span<const double> weights, std::size_t options);

/// Shannon entropy in nats, 0 ln 0 = 0.
double entropy(std::span<const double> probs);

/// Options sorted by descending score, ties by lowest index.
std::vector<std::size_t> rank_descending(std::span<const double> scores);

/// Dirichlet(alpha, ..., alpha) draw on the K-simplex. alpha == 1 uses normalized
/// unit-rate exponentials; other alphas go through a Gamma sampler.
PreferenceVector sample_simplex(std::size_t k, double alpha, Rng& rng);

/// Uniform double in [0, 1) from the top 53 bits of one generator output.
double uniform01(Rng& rng);

/// SplitMix64 finalizer; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace decisive
