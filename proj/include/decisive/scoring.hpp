#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "decisive/core.hpp"

namespace decisive {

/// 8-point ordinal assessment scale, ranks 0..7.
enum class OrdinalLevel {
    VeryLow = 0,
    Low,
    LowToMedium,
    Medium,
    MediumToHigh,
    High,
    HighToVeryHigh,
    VeryHigh,
};

inline constexpr std::size_t kLevelCount = 8;

constexpr int rank(OrdinalLevel level) { return static_cast<int>(level); }

/// Display label, e.g. "Low to Medium".
std::string_view label(OrdinalLevel level);

/// Case-insensitive match against the eight display labels after trimming outer whitespace.
std::optional<OrdinalLevel> parse_level(std::string_view text);

class LabelParseError : public std::runtime_error {
public:
    explicit LabelParseError(std::string raw)
        : std::runtime_error("unrecognised assessment label: \"" + raw + "\""), raw_(std::move(raw)) {}
    const std::string& raw() const { return raw_; }

private:
    std::string raw_;
};

/// Parses or throws LabelParseError carrying the raw text.
OrdinalLevel parse_level_strict(std::string_view text);

/// Numeric value for each level. Default is evenly spaced rank / 7.
class LabelScoreMap {
public:
    LabelScoreMap();
    /// Values must be finite, within [0, 1] and strictly increasing by rank.
    explicit LabelScoreMap(const std::array<double, kLevelCount>& values);

    double operator()(OrdinalLevel level) const { return values_[static_cast<std::size_t>(rank(level))]; }
    const std::array<double, kLevelCount>& values() const { return values_; }
    bool is_default() const;

    friend bool operator==(const LabelScoreMap&, const LabelScoreMap&) = default;

private:
    std::array<double, kLevelCount> values_;
};

double level_to_score(OrdinalLevel level);
double level_to_score(OrdinalLevel level, const LabelScoreMap& map);

/// Median by rank; the lower median for even counts.
OrdinalLevel aggregate_median(const std::vector<OrdinalLevel>& ratings);

/// One rater label per entry for a single (option, factor) cell.
struct Assessment {
    std::size_t option = 0;
    std::size_t factor = 0;
    std::vector<OrdinalLevel> ratings;
};

class IncompleteGridError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Builds S from exactly one assessment per cell. Missing, duplicate or out-of-range
/// cells raise IncompleteGridError naming the cell.
ScoringMatrix assemble_matrix(const std::vector<Assessment>& assessments, std::size_t options,
                              std::size_t factors, const LabelScoreMap& map = {},
                              std::vector<std::string> option_labels = {},
                              std::vector<std::string> factor_labels = {});

}  // namespace decisive
