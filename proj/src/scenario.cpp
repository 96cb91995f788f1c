#include "decisive/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace decisive {

using nlohmann::json;

namespace {

std::string path_of(const std::string& base, std::size_t index) { return base + "/" + std::to_string(index); }

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ScenarioError(where + "/" + key, "unknown field");
    }
}

const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ScenarioError(where + "/" + key, "missing required field");
    return *it;
}

std::string as_string(const json& v, const std::string& where) {
    if (!v.is_string()) throw ScenarioError(where, "expected a string");
    return v.get<std::string>();
}

double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ScenarioError(where, "expected a number");
    return v.get<double>();
}

const json& as_array(const json& v, const std::string& where) {
    if (!v.is_array()) throw ScenarioError(where, "expected an array");
    return v;
}

LabelScoreMap parse_label_map(const json& v) {
    if (!v.is_object()) throw ScenarioError("/label_score_map", "expected an object keyed by level label");
    std::array<double, kLevelCount> values{};
    std::array<bool, kLevelCount> seen{};
    for (const auto& [key, value] : v.items()) {
        const auto level = parse_level(key);
        const std::string where = "/label_score_map/" + key;
        if (!level) throw ScenarioError(where, "not one of the eight assessment labels");
        const auto idx = static_cast<std::size_t>(rank(*level));
        if (seen[idx]) throw ScenarioError(where, "label given twice");
        seen[idx] = true;
        values[idx] = as_number(value, where);
    }
    for (std::size_t i = 0; i < kLevelCount; ++i)
        if (!seen[i])
            throw ScenarioError("/label_score_map/" + std::string(label(static_cast<OrdinalLevel>(i))),
                                "missing label");
    try {
        return LabelScoreMap(values);
    } catch (const ValidationError& e) {
        throw ScenarioError("/label_score_map", e.what());
    }
}

}  // namespace

void Scenario::validate() const {
    if (matrix.rows() != options.size())
        throw ScenarioError("/matrix", "has " + std::to_string(matrix.rows()) + " rows for " +
                                           std::to_string(options.size()) + " options");
    if (matrix.cols() != factors.size())
        throw ScenarioError("/matrix", "has " + std::to_string(matrix.cols()) + " columns for " +
                                           std::to_string(factors.size()) + " factors");
    if (ground_truth_prefs && ground_truth_prefs->size() != factors.size())
        throw ScenarioError("/ground_truth_prefs", "dimension does not match the factor count");
}

std::vector<Assessment> to_assessments(const RawAssessments& raw) {
    std::vector<Assessment> out;
    for (std::size_t i = 0; i < raw.size(); ++i)
        for (std::size_t j = 0; j < raw[i].size(); ++j) out.push_back({i, j, raw[i][j]});
    return out;
}

ScoringMatrix matrix_for(const std::vector<OptionDescriptor>& options, const std::vector<FactorDescriptor>& factors,
                         std::vector<double> values) {
    std::vector<std::string> option_labels, factor_labels;
    for (const auto& o : options) option_labels.push_back(o.name);
    for (const auto& f : factors) factor_labels.push_back(f.name);
    return ScoringMatrix(options.size(), factors.size(), std::move(values), std::move(option_labels),
                         std::move(factor_labels));
}

Scenario scenario_from_json(const json& doc) {
    if (!doc.is_object()) throw ScenarioError("", "scenario must be a JSON object");
    reject_unknown(doc, "",
                   {"query", "options", "factors", "matrix", "raw_assessments", "ground_truth_prefs",
                    "label_score_map"});

    const std::string query = as_string(require(doc, "query", ""), "/query");

    std::vector<OptionDescriptor> options;
    const auto& opts = as_array(require(doc, "options", ""), "/options");
    for (std::size_t i = 0; i < opts.size(); ++i) {
        const std::string where = path_of("/options", i);
        if (!opts[i].is_object()) throw ScenarioError(where, "expected an object");
        reject_unknown(opts[i], where, {"name", "documents"});
        OptionDescriptor o;
        o.name = as_string(require(opts[i], "name", where), where + "/name");
        if (o.name.empty()) throw ScenarioError(where + "/name", "must not be empty");
        if (auto it = opts[i].find("documents"); it != opts[i].end()) {
            const auto& docs = as_array(*it, where + "/documents");
            for (std::size_t d = 0; d < docs.size(); ++d)
                o.documents.push_back(as_string(docs[d], path_of(where + "/documents", d)));
        }
        options.push_back(std::move(o));
    }
    if (options.empty()) throw ScenarioError("/options", "needs at least one option");

    std::vector<FactorDescriptor> factors;
    std::set<std::string> factor_names;
    const auto& facs = as_array(require(doc, "factors", ""), "/factors");
    for (std::size_t j = 0; j < facs.size(); ++j) {
        const std::string where = path_of("/factors", j);
        if (!facs[j].is_object()) throw ScenarioError(where, "expected an object");
        reject_unknown(facs[j], where, {"name", "description"});
        FactorDescriptor f;
        f.name = as_string(require(facs[j], "name", where), where + "/name");
        if (f.name.empty()) throw ScenarioError(where + "/name", "must not be empty");
        if (!factor_names.insert(f.name).second) throw ScenarioError(where + "/name", "duplicate factor name");
        if (auto it = facs[j].find("description"); it != facs[j].end())
            f.description = as_string(*it, where + "/description");
        factors.push_back(std::move(f));
    }
    if (factors.empty()) throw ScenarioError("/factors", "needs at least one factor");

    const std::size_t m = options.size();
    const std::size_t k = factors.size();

    std::optional<LabelScoreMap> label_map;
    if (auto it = doc.find("label_score_map"); it != doc.end()) label_map = parse_label_map(*it);

    std::optional<RawAssessments> raw;
    if (auto it = doc.find("raw_assessments"); it != doc.end()) {
        const auto& rows = as_array(*it, "/raw_assessments");
        if (rows.size() != m) throw ScenarioError("/raw_assessments", "expected " + std::to_string(m) + " rows");
        RawAssessments grid(m, std::vector<std::vector<OrdinalLevel>>(k));
        for (std::size_t i = 0; i < m; ++i) {
            const auto& row = as_array(rows[i], path_of("/raw_assessments", i));
            if (row.size() != k)
                throw ScenarioError(path_of("/raw_assessments", i), "expected " + std::to_string(k) + " cells");
            for (std::size_t j = 0; j < k; ++j) {
                const std::string where = path_of(path_of("/raw_assessments", i), j);
                const auto& cell = as_array(row[j], where);
                if (cell.empty()) throw ScenarioError(where, "needs at least one rating");
                for (std::size_t r = 0; r < cell.size(); ++r) {
                    const auto text = as_string(cell[r], path_of(where, r));
                    const auto level = parse_level(text);
                    if (!level) throw ScenarioError(path_of(where, r), "unrecognised label \"" + text + "\"");
                    grid[i][j].push_back(*level);
                }
            }
        }
        raw = std::move(grid);
    }

    std::optional<std::vector<double>> values;
    if (auto it = doc.find("matrix"); it != doc.end()) {
        const auto& rows = as_array(*it, "/matrix");
        if (rows.size() != m) throw ScenarioError("/matrix", "expected " + std::to_string(m) + " rows");
        std::vector<double> flat;
        flat.reserve(m * k);
        for (std::size_t i = 0; i < m; ++i) {
            const auto& row = as_array(rows[i], path_of("/matrix", i));
            if (row.size() != k) throw ScenarioError(path_of("/matrix", i), "expected " + std::to_string(k) + " cells");
            for (std::size_t j = 0; j < k; ++j) {
                const std::string where = path_of(path_of("/matrix", i), j);
                const double v = as_number(row[j], where);
                if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
                    std::ostringstream msg;
                    msg << "value " << v << " is outside [0, 1]";
                    throw ScenarioError(where, msg.str());
                }
                flat.push_back(v);
            }
        }
        values = std::move(flat);
    }

    if (!values && !raw) throw ScenarioError("/matrix", "either matrix or raw_assessments is required");

    if (raw) {
        const auto from_raw = assemble_matrix(to_assessments(*raw), m, k, label_map.value_or(LabelScoreMap{}));
        if (values) {
            for (std::size_t idx = 0; idx < values->size(); ++idx)
                if (std::abs((*values)[idx] - from_raw.values()[idx]) > 1e-9)
                    throw ScenarioError(path_of(path_of("/matrix", idx / k), idx % k),
                                        "disagrees with the value assembled from raw_assessments");
        }
        values = from_raw.values();
    }

    std::optional<PreferenceVector> truth;
    if (auto it = doc.find("ground_truth_prefs"); it != doc.end()) {
        const auto& arr = as_array(*it, "/ground_truth_prefs");
        if (arr.size() != k) throw ScenarioError("/ground_truth_prefs", "expected " + std::to_string(k) + " weights");
        std::vector<double> w;
        for (std::size_t j = 0; j < k; ++j) w.push_back(as_number(arr[j], path_of("/ground_truth_prefs", j)));
        try {
            truth = PreferenceVector(std::move(w));
        } catch (const std::invalid_argument& e) {
            throw ScenarioError("/ground_truth_prefs", e.what());
        }
    }

    auto matrix = matrix_for(options, factors, std::move(*values));
    Scenario scenario{query, std::move(options), std::move(factors), std::move(matrix), std::move(raw),
                      std::move(truth), label_map};
    scenario.validate();
    return scenario;
}

json scenario_to_json(const Scenario& scenario) {
    scenario.validate();
    json doc = json::object();
    doc["query"] = scenario.query;
    doc["options"] = json::array();
    for (const auto& o : scenario.options) doc["options"].push_back({{"name", o.name}, {"documents", o.documents}});
    doc["factors"] = json::array();
    for (const auto& f : scenario.factors)
        doc["factors"].push_back({{"name", f.name}, {"description", f.description}});
    json rows = json::array();
    for (std::size_t i = 0; i < scenario.matrix.rows(); ++i) {
        const auto row = scenario.matrix.row(i);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    doc["matrix"] = std::move(rows);
    if (scenario.raw_assessments) {
        json raw = json::array();
        for (const auto& row : *scenario.raw_assessments) {
            json out_row = json::array();
            for (const auto& cell : row) {
                json labels = json::array();
                for (auto level : cell) labels.push_back(std::string(label(level)));
                out_row.push_back(std::move(labels));
            }
            raw.push_back(std::move(out_row));
        }
        doc["raw_assessments"] = std::move(raw);
    }
    if (scenario.ground_truth_prefs) {
        const auto w = scenario.ground_truth_prefs->weights();
        doc["ground_truth_prefs"] = std::vector<double>(w.begin(), w.end());
    }
    if (scenario.label_score_map) {
        json map = json::object();
        for (std::size_t i = 0; i < kLevelCount; ++i)
            map[std::string(label(static_cast<OrdinalLevel>(i)))] = scenario.label_score_map->values()[i];
        doc["label_score_map"] = std::move(map);
    }
    return doc;
}

Scenario parse_scenario(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError("", std::string("invalid JSON: ") + e.what());
    }
    return scenario_from_json(doc);
}

std::string serialize_scenario(const Scenario& scenario) { return scenario_to_json(scenario).dump(2) + "\n"; }

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open scenario file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
    const auto text = serialize_scenario(scenario);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write scenario file " + path.string());
    out << text;
    if (!out) throw std::runtime_error("failed writing scenario file " + path.string());
}

}  // namespace decisive
