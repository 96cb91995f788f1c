#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "decisive/core.hpp"
#include "decisive/scoring.hpp"

namespace decisive {

struct OptionDescriptor {
    std::string name;
    std::vector<std::string> documents;

    friend bool operator==(const OptionDescriptor&, const OptionDescriptor&) = default;
};

struct FactorDescriptor {
    std::string name;
    std::string description;

    friend bool operator==(const FactorDescriptor&, const FactorDescriptor&) = default;
};

/// Per-cell rater labels, indexed [option][factor][rater].
using RawAssessments = std::vector<std::vector<std::vector<OrdinalLevel>>>;

/// A decision problem: query, options, factors and the scoring matrix over them.
struct Scenario {
    std::string query;
    std::vector<OptionDescriptor> options;
    std::vector<FactorDescriptor> factors;
    ScoringMatrix matrix;
    std::optional<RawAssessments> raw_assessments;
    std::optional<PreferenceVector> ground_truth_prefs;
    std::optional<LabelScoreMap> label_score_map;

    /// Checks matrix dimensions and labels against options and factors.
    void validate() const;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Thrown for malformed scenario documents; `field` is a JSON-pointer-like path.
class ScenarioError : public std::invalid_argument {
public:
    ScenarioError(std::string field, const std::string& message)
        : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Grid of assessments for the raw label lists.
std::vector<Assessment> to_assessments(const RawAssessments& raw);

/// Builds the matrix labels from the descriptors.
ScoringMatrix matrix_for(const std::vector<OptionDescriptor>& options, const std::vector<FactorDescriptor>& factors,
                         std::vector<double> values);

Scenario scenario_from_json(const nlohmann::json& doc);
nlohmann::json scenario_to_json(const Scenario& scenario);

Scenario parse_scenario(const std::string& text);
std::string serialize_scenario(const Scenario& scenario);

Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

}  // namespace decisive
