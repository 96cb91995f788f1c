#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "decisive/scenario.hpp"
#include "decisive/scoring.hpp"

namespace decisive {

/// Provider-agnostic request: prompt text plus metadata (task, cell key, ...).
struct AssessorRequest {
    std::string task;
    std::string prompt;
    nlohmann::json metadata = nlohmann::json::object();
};

/// Transport-level failure talking to an assessor.
class AssessorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class AssessorClient {
public:
    virtual ~AssessorClient() = default;
    /// Returns the raw response text. Implementations must be callable from several threads.
    virtual std::string complete(const AssessorRequest& request) = 0;
    virtual std::string name() const = 0;
};

/// In-process client backed by a function; used in tests and offline runs.
class StubAssessor : public AssessorClient {
public:
    using Handler = std::function<std::string(const AssessorRequest&)>;

    StubAssessor(std::string name, Handler handler) : name_(std::move(name)), handler_(std::move(handler)) {}
    static std::unique_ptr<StubAssessor> fixed(std::string name, std::string text);

    std::string complete(const AssessorRequest& request) override { return handler_(request); }
    std::string name() const override { return name_; }

private:
    std::string name_;
    Handler handler_;
};

/// Serves recorded responses keyed by (task, metadata.key).
///
/// File layout:
///   {"rater": "model-a",
///    "responses": [{"task": "score_cell", "key": "0/3", "response": "High"}, ...]}
class ReplayAssessor : public AssessorClient {
public:
    explicit ReplayAssessor(const nlohmann::json& doc);
    static std::unique_ptr<ReplayAssessor> from_file(const std::filesystem::path& path);

    std::string complete(const AssessorRequest& request) override;
    std::string name() const override { return rater_; }

private:
    std::string rater_;
    std::map<std::pair<std::string, std::string>, std::string> responses_;
};

/// POSTs {"task", "prompt", "metadata", "model"} as JSON and expects {"text": "..."} back.
class HttpAssessor : public AssessorClient {
public:
    struct Options {
        std::string url;
        int timeout_ms = 30000;
        int retries = 2;
        std::string model;
    };

    /// Reads DECISIVE_ASSESSOR_URL, DECISIVE_ASSESSOR_TIMEOUT_MS and DECISIVE_ASSESSOR_RETRIES.
    static Options options_from_environment(std::string model = {});

    explicit HttpAssessor(Options options);

    std::string complete(const AssessorRequest& request) override;
    std::string name() const override { return options_.model.empty() ? options_.url : options_.model; }

private:
    Options options_;
    std::string origin_;
    std::string path_;
};

inline constexpr std::size_t kMaxFactors = 30;

std::string factor_extraction_prompt(const std::string& query, std::span<const std::string> documents);
std::string cell_scoring_prompt(std::span<const std::string> documents, const FactorDescriptor& factor);

/// Asks the client for the decision factors. The response must be a JSON array of
/// names or {name, description} objects; 1..30 unique names.
std::vector<FactorDescriptor> extract_factors(const std::string& query, std::span<const std::string> documents,
                                              AssessorClient& client);

struct CellRef {
    std::size_t option = 0;
    std::size_t factor = 0;
};

/// One strict ordinal label for one cell; anything else raises LabelParseError.
OrdinalLevel score_cell(std::span<const std::string> documents, const FactorDescriptor& factor,
                        AssessorClient& client, CellRef cell = {});

/// Scores every (option, factor) cell with every rater, keeping at most `max_in_flight`
/// requests outstanding. Ratings within a cell follow the order of `raters`.
std::vector<Assessment> score_grid(const std::vector<OptionDescriptor>& options,
                                   const std::vector<FactorDescriptor>& factors,
                                   std::span<AssessorClient* const> raters, std::size_t max_in_flight = 4);

}  // namespace decisive
