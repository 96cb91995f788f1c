#include "decisive/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace decisive {

namespace {

constexpr std::array<std::string_view, kLevelCount> kLabels = {
    "Very Low", "Low", "Low to Medium", "Medium", "Medium to High", "High", "High to Very High", "Very High",
};

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    return true;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::array<double, kLevelCount> evenly_spaced() {
    std::array<double, kLevelCount> v{};
    for (std::size_t i = 0; i < kLevelCount; ++i) v[i] = static_cast<double>(i) / 7.0;
    return v;
}

}  // namespace

std::string_view label(OrdinalLevel level) {
    return kLabels[static_cast<std::size_t>(rank(level))];
}

std::optional<OrdinalLevel> parse_level(std::string_view text) {
    const auto t = trim(text);
    for (std::size_t i = 0; i < kLevelCount; ++i)
        if (iequals(t, kLabels[i])) return static_cast<OrdinalLevel>(i);
    return std::nullopt;
}

OrdinalLevel parse_level_strict(std::string_view text) {
    if (auto level = parse_level(text)) return *level;
    throw LabelParseError(std::string(text));
}

LabelScoreMap::LabelScoreMap() : values_(evenly_spaced()) {}

LabelScoreMap::LabelScoreMap(const std::array<double, kLevelCount>& values) : values_(values) {
    for (std::size_t i = 0; i < kLevelCount; ++i) {
        if (!std::isfinite(values_[i]) || values_[i] < 0.0 || values_[i] > 1.0)
            throw ValidationError("label score for \"" + std::string(kLabels[i]) + "\" must lie in [0, 1]");
        if (i > 0 && !(values_[i] > values_[i - 1]))
            throw ValidationError("label scores must increase strictly with rank (at \"" + std::string(kLabels[i]) +
                                  "\")");
    }
}

bool LabelScoreMap::is_default() const { return values_ == evenly_spaced(); }

double level_to_score(OrdinalLevel level) { return static_cast<double>(rank(level)) / 7.0; }

double level_to_score(OrdinalLevel level, const LabelScoreMap& map) { return map(level); }

OrdinalLevel aggregate_median(const std::vector<OrdinalLevel>& ratings) {
    if (ratings.empty()) throw ValidationError("cannot aggregate an empty rating list");
    std::vector<OrdinalLevel> sorted = ratings;
    std::sort(sorted.begin(), sorted.end());
    return sorted[(sorted.size() - 1) / 2];
}

ScoringMatrix assemble_matrix(const std::vector<Assessment>& assessments, std::size_t options,
                              std::size_t factors, const LabelScoreMap& map,
                              std::vector<std::string> option_labels, std::vector<std::string> factor_labels) {
    if (options == 0 || factors == 0) throw DimensionError("assessment grid needs at least one option and factor");
    const auto cell_name = [](std::size_t i, std::size_t j) {
        return "(option " + std::to_string(i) + ", factor " + std::to_string(j) + ")";
    };
    std::vector<double> values(options * factors, 0.0);
    std::vector<bool> seen(options * factors, false);
    for (const auto& a : assessments) {
        if (a.option >= options || a.factor >= factors)
            throw IncompleteGridError("assessment for cell " + cell_name(a.option, a.factor) + " is outside the " +
                                      std::to_string(options) + "x" + std::to_string(factors) + " grid");
        const std::size_t idx = a.option * factors + a.factor;
        if (seen[idx]) throw IncompleteGridError("duplicate assessment for cell " + cell_name(a.option, a.factor));
        if (a.ratings.empty()) throw IncompleteGridError("no ratings for cell " + cell_name(a.option, a.factor));
        seen[idx] = true;
        values[idx] = map(aggregate_median(a.ratings));
    }
    for (std::size_t i = 0; i < options; ++i)
        for (std::size_t j = 0; j < factors; ++j)
            if (!seen[i * factors + j]) throw IncompleteGridError("missing assessment for cell " + cell_name(i, j));
    return ScoringMatrix(options, factors, std::move(values), std::move(option_labels), std::move(factor_labels));
}

}  // namespace decisive
