#include "decisive/assessor.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "httplib.h"

namespace decisive {

using nlohmann::json;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return (v && *v) ? std::string(v) : fallback;
}

int env_int(const char* name, int fallback) {
    const char* v = std::getenv(name);
    if (!v || !*v) return fallback;
    try {
        return std::stoi(v);
    } catch (const std::exception&) {
        throw AssessorError(std::string(name) + " is not an integer: " + v);
    }
}

std::string cell_key(CellRef cell) { return std::to_string(cell.option) + "/" + std::to_string(cell.factor); }

}  // namespace

// ---------------------------------------------------------------------------
// Clients

std::unique_ptr<StubAssessor> StubAssessor::fixed(std::string name, std::string text) {
    return std::make_unique<StubAssessor>(std::move(name), [text](const AssessorRequest&) { return text; });
}

ReplayAssessor::ReplayAssessor(const json& doc) {
    if (!doc.is_object() || !doc.contains("responses") || !doc["responses"].is_array())
        throw AssessorError("replay document needs a \"responses\" array");
    rater_ = doc.value("rater", std::string("replay"));
    for (const auto& entry : doc["responses"]) {
        if (!entry.is_object() || !entry.contains("task") || !entry.contains("response"))
            throw AssessorError("replay entries need \"task\" and \"response\"");
        const auto key = entry.value("key", std::string());
        responses_[{entry["task"].get<std::string>(), key}] = entry["response"].get<std::string>();
    }
}

std::unique_ptr<ReplayAssessor> ReplayAssessor::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw AssessorError("cannot open replay file " + path.string());
    try {
        return std::make_unique<ReplayAssessor>(json::parse(in));
    } catch (const json::exception& e) {
        throw AssessorError("replay file " + path.string() + ": " + e.what());
    }
}

std::string ReplayAssessor::complete(const AssessorRequest& request) {
    const std::string key = request.metadata.value("key", std::string());
    auto it = responses_.find({request.task, key});
    if (it == responses_.end())
        throw AssessorError("replay '" + rater_ + "' has no response for " + request.task + " " + key);
    return it->second;
}

HttpAssessor::Options HttpAssessor::options_from_environment(std::string model) {
    Options o;
    o.url = env_or("DECISIVE_ASSESSOR_URL", "");
    o.timeout_ms = env_int("DECISIVE_ASSESSOR_TIMEOUT_MS", o.timeout_ms);
    o.retries = env_int("DECISIVE_ASSESSOR_RETRIES", o.retries);
    o.model = std::move(model);
    return o;
}

HttpAssessor::HttpAssessor(Options options) : options_(std::move(options)) {
    if (options_.url.empty()) throw AssessorError("assessor URL is not configured (DECISIVE_ASSESSOR_URL)");
    if (options_.timeout_ms <= 0 || options_.retries < 0) throw AssessorError("invalid assessor timeout or retries");
    const auto scheme_end = options_.url.find("://");
    if (scheme_end == std::string::npos) throw AssessorError("assessor URL needs a scheme: " + options_.url);
    const auto path_start = options_.url.find('/', scheme_end + 3);
    origin_ = options_.url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : options_.url.substr(path_start);
}

std::string HttpAssessor::complete(const AssessorRequest& request) {
    json body = {{"task", request.task}, {"prompt", request.prompt}, {"metadata", request.metadata}};
    if (!options_.model.empty()) body["model"] = options_.model;
    const auto payload = body.dump();

    httplib::Client client(origin_);
    const auto seconds = options_.timeout_ms / 1000;
    const auto micros = (options_.timeout_ms % 1000) * 1000;
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);

    std::string last_error;
    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
        auto res = client.Post(path_, payload, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) throw AssessorError("assessor returned HTTP " + std::to_string(res->status));
        try {
            const auto reply = json::parse(res->body);
            return reply.at("text").get<std::string>();
        } catch (const json::exception& e) {
            throw AssessorError(std::string("malformed assessor reply: ") + e.what());
        }
    }
    throw AssessorError("assessor request failed after " + std::to_string(options_.retries + 1) +
                        " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// Extraction and scoring

std::string factor_extraction_prompt(const std::string& query, std::span<const std::string> documents) {
    std::ostringstream p;
    p << "Decision question: " << query << "\n\n"
      << "List the decision-relevant factors a person would weigh when answering it, as a JSON array of "
         "objects with \"name\" and \"description\". Use between 1 and "
      << kMaxFactors << " factors with distinct names.\n";
    for (std::size_t i = 0; i < documents.size(); ++i) p << "\n--- document " << i + 1 << " ---\n" << documents[i] << "\n";
    return p.str();
}

std::string cell_scoring_prompt(std::span<const std::string> documents, const FactorDescriptor& factor) {
    std::ostringstream p;
    p << "Rate the option described below on the factor \"" << factor.name << "\"";
    if (!factor.description.empty()) p << " (" << factor.description << ")";
    p << ". Answer with exactly one of:";
    for (std::size_t i = 0; i < kLevelCount; ++i) p << (i ? ", " : " ") << label(static_cast<OrdinalLevel>(i));
    p << ".\n";
    for (std::size_t i = 0; i < documents.size(); ++i) p << "\n--- document " << i + 1 << " ---\n" << documents[i] << "\n";
    return p.str();
}

std::vector<FactorDescriptor> extract_factors(const std::string& query, std::span<const std::string> documents,
                                              AssessorClient& client) {
    AssessorRequest request{"extract_factors", factor_extraction_prompt(query, documents), {{"key", "factors"}}};
    const auto text = client.complete(request);
    json reply;
    try {
        reply = json::parse(text);
    } catch (const json::parse_error&) {
        throw ValidationError("factor list is not JSON: " + text);
    }
    if (!reply.is_array()) throw ValidationError("factor list must be a JSON array");
    std::vector<FactorDescriptor> factors;
    std::set<std::string> names;
    for (const auto& item : reply) {
        FactorDescriptor f;
        if (item.is_string()) {
            f.name = item.get<std::string>();
        } else if (item.is_object() && item.contains("name") && item["name"].is_string()) {
            f.name = item["name"].get<std::string>();
            if (item.contains("description") && item["description"].is_string())
                f.description = item["description"].get<std::string>();
        } else {
            throw ValidationError("factor entries must be names or {name, description} objects");
        }
        if (f.name.empty()) throw ValidationError("factor with an empty name");
        if (!names.insert(f.name).second) throw ValidationError("duplicate factor name \"" + f.name + "\"");
        factors.push_back(std::move(f));
    }
    if (factors.empty()) throw ValidationError("assessor returned no factors");
    if (factors.size() > kMaxFactors)
        throw ValidationError("assessor returned " + std::to_string(factors.size()) + " factors, limit is " +
                              std::to_string(kMaxFactors));
    return factors;
}

OrdinalLevel score_cell(std::span<const std::string> documents, const FactorDescriptor& factor,
                        AssessorClient& client, CellRef cell) {
    AssessorRequest request{"score_cell", cell_scoring_prompt(documents, factor),
                            {{"key", cell_key(cell)}, {"option", cell.option}, {"factor", factor.name}}};
    return parse_level_strict(client.complete(request));
}

std::vector<Assessment> score_grid(const std::vector<OptionDescriptor>& options,
                                   const std::vector<FactorDescriptor>& factors,
                                   std::span<AssessorClient* const> raters, std::size_t max_in_flight) {
    if (raters.empty()) throw ValidationError("score_grid needs at least one rater");
    if (max_in_flight == 0) throw ValidationError("max_in_flight must be at least 1");
    const std::size_t k = factors.size();
    const std::size_t jobs = options.size() * k * raters.size();

    std::vector<Assessment> grid;
    for (std::size_t i = 0; i < options.size(); ++i)
        for (std::size_t j = 0; j < k; ++j) grid.push_back({i, j, std::vector<OrdinalLevel>(raters.size())});

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    const auto worker = [&] {
        for (;;) {
            const std::size_t job = next.fetch_add(1);
            if (job >= jobs) return;
            {
                std::lock_guard lock(error_mutex);
                if (first_error) return;
            }
            const std::size_t cell = job / raters.size();
            const std::size_t rater = job % raters.size();
            const std::size_t i = cell / k;
            const std::size_t j = cell % k;
            try {
                grid[cell].ratings[rater] = score_cell(options[i].documents, factors[j], *raters[rater], {i, j});
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };

    std::vector<std::thread> threads;
    const std::size_t n_threads = std::min(max_in_flight, jobs);
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return grid;
}

}  // namespace decisive
