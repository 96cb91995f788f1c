#include "decisive/service.hpp"

#include <cstdio>
#include <ctime>
#include <iomanip>
#include <mutex>
#include <random>
#include <regex>
#include <sstream>

namespace decisive {

using nlohmann::json;

namespace {

ServiceError bad_request(const std::string& code, const std::string& message, json detail = nullptr) {
    return ServiceError(400, code, message, std::move(detail));
}

bool is_count(const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

ServiceError conflict(const std::string& code, const std::string& message, json detail = nullptr) {
    return ServiceError(409, code, message, std::move(detail));
}

std::optional<Clock::time_point> parse_timestamp(const std::string& text) {
    std::tm tm{};
    std::istringstream in(text);
    in >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%S");
    if (in.fail()) return std::nullopt;
    int millis = 0;
    if (in.peek() == '.') {
        in.get();
        in >> millis;
    }
    return Clock::from_time_t(timegm(&tm)) + std::chrono::milliseconds(millis);
}

json config_to_json(const ElicitationConfig& c) {
    return {{"kappa", c.kappa},
            {"tau", c.tau},
            {"max_questions", c.max_questions ? json(*c.max_questions) : json(nullptr)},
            {"particle_count", c.particle_count},
            {"allow_repeat_questions", c.allow_repeat_questions}};
}

struct Overrides {
    ElicitationConfig config;
    std::optional<std::uint64_t> seed;
};

Overrides apply_overrides(ElicitationConfig base, const json& doc) {
    Overrides out{std::move(base), std::nullopt};
    if (doc.is_null()) return out;
    if (!doc.is_object()) throw bad_request("invalid_config", "config must be an object", {{"field", "/config"}});

    auto field_error = [](const std::string& key, const std::string& what) {
        return bad_request("invalid_config", "config." + key + " " + what, {{"field", "/config/" + key}});
    };
    auto number = [&](const std::string& key, const json& v) {
        if (!v.is_number()) throw field_error(key, "must be a number");
        return v.get<double>();
    };
    auto count = [&](const std::string& key, const json& v) {
        if (!is_count(v)) throw field_error(key, "must be a non-negative integer");
        return v.get<std::uint64_t>();
    };

    for (const auto& [key, v] : doc.items()) {
        if (key == "kappa") {
            out.config.kappa = number(key, v);
        } else if (key == "tau") {
            out.config.tau = number(key, v);
        } else if (key == "max_questions") {
            out.config.max_questions =
                v.is_null() ? std::nullopt : std::optional<std::size_t>(count(key, v));
        } else if (key == "particle_count") {
            out.config.particle_count = count(key, v);
        } else if (key == "allow_repeat_questions") {
            if (!v.is_boolean()) throw field_error(key, "must be a boolean");
            out.config.allow_repeat_questions = v.get<bool>();
        } else if (key == "seed") {
            out.seed = count(key, v);
        } else {
            throw field_error(key, "is not a recognised field");
        }
    }
    try {
        out.config.validate();
    } catch (const std::exception& e) {
        throw bad_request("invalid_config", e.what());
    }
    return out;
}

json question_json(const ScoringMatrix& m, Question q) {
    return {{"factor_a", q.factor_a},
            {"factor_b", q.factor_b},
            {"label_a", m.factor_labels()[q.factor_a]},
            {"label_b", m.factor_labels()[q.factor_b]}};
}

void put_status(json& out, const SessionState& s) {
    out["status"] = s.active() ? "active" : "stopped";
    out["stop_reason"] = s.stop_reason() ? json(std::string(to_string(*s.stop_reason()))) : json(nullptr);
    out["confidence"] = s.confidence();
    out["questions_asked"] = s.questions_asked();
    out["question_budget"] = s.question_budget();
}

Question parse_question(const json& doc) {
    if (!doc.is_object() || !doc.contains("factor_a") || !doc.contains("factor_b"))
        throw bad_request("invalid_answer", "question must be an object with factor_a and factor_b",
                          {{"field", "/question"}});
    const auto& a = doc["factor_a"];
    const auto& b = doc["factor_b"];
    if (!is_count(a) || !is_count(b))
        throw bad_request("invalid_answer", "factor indices must be non-negative integers", {{"field", "/question"}});
    return Question{a.get<std::size_t>(), b.get<std::size_t>()};
}

}  // namespace

json ServiceError::to_json() const { return {{"code", code_}, {"message", what()}, {"detail", detail_}}; }

std::string format_timestamp(Clock::time_point t) {
    const auto secs = std::chrono::time_point_cast<std::chrono::seconds>(t);
    const auto millis = std::chrono::duration_cast<std::chrono::milliseconds>(t - secs).count();
    const std::time_t tt = Clock::to_time_t(secs);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(millis));
    return buf;
}

struct SessionService::Record {
    Record(std::string id_, Scenario scenario_, std::uint64_t seed_, SessionState state_, Clock::time_point at)
        : id(std::move(id_)),
          scenario(std::move(scenario_)),
          seed(seed_),
          state(std::move(state_)),
          created(at),
          updated(at) {}

    std::mutex mutex;
    std::string id;
    Scenario scenario;
    std::uint64_t seed;
    SessionState state;
    std::optional<Question> offered;
    Clock::time_point created;
    Clock::time_point updated;
};

SessionService::SessionService(ServiceOptions options) : options_(std::move(options)), id_rng_([] {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}()) {
    options_.defaults.validate();
    if (options_.journal) {
        replay(*options_.journal);
        journal_ = std::make_unique<Journal>(*options_.journal);
    }
}

SessionService::~SessionService() = default;

std::string SessionService::new_id() {
    std::lock_guard lock(id_mutex_);
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(id_rng_()),
                  static_cast<unsigned long long>(id_rng_()));
    return buf;
}

void SessionService::replay(const std::filesystem::path& path) {
    for (const auto& rec : Journal::read(path)) {
        const std::string event = rec.value("event", "");
        const std::string id = rec.value("session_id", "");
        const auto at = parse_timestamp(rec.value("at", "")).value_or(options_.now());
        if (event == "create") {
            auto scenario = scenario_from_json(rec.at("scenario"));
            const auto overrides = apply_overrides(options_.defaults, rec.at("config"));
            Rng rng(rec.at("seed").get<std::uint64_t>());
            auto state = SessionState::start(scenario.matrix, overrides.config, rng);
            sessions_[id] = std::make_shared<Record>(id, std::move(scenario), rec.at("seed").get<std::uint64_t>(),
                                                     std::move(state), at);
        } else if (event == "answer") {
            auto it = sessions_.find(id);
            if (it == sessions_.end()) continue;
            const auto q = parse_question(rec.at("question"));
            const auto r = parse_response(rec.at("response").get<std::string>());
            if (!r) throw std::runtime_error("journal: unknown response for session " + id);
            it->second->state.record(q, *r);
            it->second->updated = at;
        } else if (event == "expire") {
            sessions_.erase(id);
        }
    }
}

std::shared_ptr<SessionService::Record> SessionService::find(const std::string& id) {
    std::shared_ptr<Record> rec;
    {
        std::shared_lock lock(mutex_);
        auto it = sessions_.find(id);
        if (it != sessions_.end()) rec = it->second;
    }
    if (rec) {
        std::unique_lock rec_lock(rec->mutex);
        if (options_.now() - rec->updated > options_.idle_timeout) {
            rec_lock.unlock();
            expire_idle();
            rec.reset();
        }
    }
    if (!rec) throw ServiceError(404, "session_not_found", "no session with id " + id, {{"session_id", id}});
    return rec;
}

json SessionService::create_session(const json& request) {
    expire_idle();
    if (!request.is_object()) throw bad_request("invalid_request", "request body must be a JSON object");
    for (const auto& [key, _] : request.items())
        if (key != "scenario" && key != "scenario_id" && key != "config")
            throw bad_request("invalid_request", "unknown field " + key, {{"field", "/" + key}});

    std::optional<Scenario> scenario;
    try {
        if (request.contains("scenario")) {
            if (request.contains("scenario_id"))
                throw bad_request("invalid_request", "give either scenario or scenario_id, not both");
            scenario = scenario_from_json(request["scenario"]);
        } else if (request.contains("scenario_id")) {
            const auto& sid = request["scenario_id"];
            static const std::regex safe("[A-Za-z0-9_.-]+");
            if (!sid.is_string() || !std::regex_match(sid.get<std::string>(), safe) || sid == "." || sid == "..")
                throw bad_request("invalid_request", "scenario_id must be a plain name", {{"field", "/scenario_id"}});
            if (!options_.scenario_dir)
                throw ServiceError(404, "scenario_not_found", "this server has no scenario directory");
            const auto file = *options_.scenario_dir / (sid.get<std::string>() + ".json");
            if (!std::filesystem::exists(file))
                throw ServiceError(404, "scenario_not_found", "unknown scenario " + sid.get<std::string>(),
                                   {{"scenario_id", sid}});
            scenario = load_scenario(file);
        } else {
            throw bad_request("invalid_request", "scenario or scenario_id is required");
        }
    } catch (const ScenarioError& e) {
        throw bad_request("invalid_scenario", e.what(), {{"field", "/scenario" + e.field()}});
    } catch (const ServiceError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw bad_request("invalid_scenario", e.what());
    }

    auto overrides = apply_overrides(options_.defaults, request.value("config", json(nullptr)));
    const std::uint64_t seed = overrides.seed.value_or([] {
        std::random_device rd;
        // 53 bits so the value survives a round trip through a JavaScript number.
        return ((static_cast<std::uint64_t>(rd()) << 32) ^ rd()) & ((1ULL << 53) - 1);
    }());

    Rng rng(seed);
    auto state = SessionState::start(scenario->matrix, overrides.config, rng);
    const auto now = options_.now();
    const std::string id = new_id();
    auto rec = std::make_shared<Record>(id, std::move(*scenario), seed, std::move(state), now);

    json config_doc = config_to_json(overrides.config);
    if (journal_) {
        journal_->append({{"event", "create"},
                          {"at", format_timestamp(now)},
                          {"session_id", id},
                          {"seed", seed},
                          {"config", config_doc},
                          {"scenario", scenario_to_json(rec->scenario)}});
    }

    json out = {{"session_id", id},
                {"seed", seed},
                {"query", rec->scenario.query},
                {"options", rec->state.matrix().option_labels()},
                {"factors", rec->state.matrix().factor_labels()},
                {"config", config_doc},
                {"created_at", format_timestamp(now)}};
    put_status(out, rec->state);

    std::unique_lock lock(mutex_);
    sessions_[id] = std::move(rec);
    return out;
}

json SessionService::next_question(const std::string& id) {
    auto rec = find(id);
    std::lock_guard lock(rec->mutex);
    json out = {{"session_id", id}};
    if (rec->state.active() && !rec->offered) rec->offered = select_question(rec->state);
    if (rec->state.active() && rec->offered) out["question"] = question_json(rec->state.matrix(), *rec->offered);
    put_status(out, rec->state);
    return out;
}

json SessionService::submit_answer(const std::string& id, const json& request) {
    auto rec = find(id);
    std::lock_guard lock(rec->mutex);
    auto& state = rec->state;
    if (!state.active())
        throw conflict("session_stopped", "session has stopped",
                       {{"stop_reason", std::string(to_string(*state.stop_reason()))}});

    if (!request.is_object() || !request.contains("question") || !request.contains("response"))
        throw bad_request("invalid_answer", "body must contain question and response");
    const auto q = parse_question(request["question"]);
    const auto& rtext = request["response"];
    const auto r = rtext.is_string() ? parse_response(rtext.get<std::string>()) : std::nullopt;
    if (!r)
        throw bad_request("invalid_answer", "response must be prefer_a, prefer_b, neutral or both_important",
                          {{"field", "/response"}});

    if (!rec->offered) rec->offered = select_question(state);
    if (!rec->offered || rec->offered->factor_a != q.factor_a || rec->offered->factor_b != q.factor_b) {
        json detail = {{"answered", {{"factor_a", q.factor_a}, {"factor_b", q.factor_b}}}};
        if (rec->offered) detail["expected"] = question_json(state.matrix(), *rec->offered);
        throw conflict("stale_question", "answer does not match the question currently offered", detail);
    }

    try {
        state.record(q, *r);
    } catch (const SessionStoppedError& e) {
        throw conflict("session_stopped", e.what());
    } catch (const std::invalid_argument& e) {
        throw bad_request("invalid_answer", e.what());
    }
    rec->offered.reset();
    rec->updated = options_.now();

    if (journal_) {
        journal_->append({{"event", "answer"},
                          {"at", format_timestamp(rec->updated)},
                          {"session_id", id},
                          {"question", {{"factor_a", q.factor_a}, {"factor_b", q.factor_b}}},
                          {"response", std::string(to_string(*r))}});
    }

    json out = {{"session_id", id}};
    put_status(out, state);
    return out;
}

json SessionService::recommendation(const std::string& id) {
    auto rec = find(id);
    std::lock_guard lock(rec->mutex);
    const auto& state = rec->state;
    const auto& m = state.matrix();
    const auto eu = expected_utilities(state.particles(), m);

    json ranking = json::array();
    for (std::size_t i : rank_descending(eu))
        ranking.push_back({{"option", i}, {"label", m.option_labels()[i]}, {"expected_utility", eu[i]}});

    json transcript = json::array();
    for (const auto& e : state.transcript())
        transcript.push_back({{"question", question_json(m, e.question)},
                              {"response", std::string(to_string(e.response))},
                              {"confidence", e.confidence}});

    json out = {{"session_id", id},
                {"seed", rec->seed},
                {"ranking", ranking},
                {"chi", state.decision().probs},
                {"entropy", state.decision().entropy},
                {"transcript", transcript},
                {"created_at", format_timestamp(rec->created)},
                {"updated_at", format_timestamp(rec->updated)}};
    put_status(out, state);
    return out;
}

std::size_t SessionService::expire_idle() {
    const auto now = options_.now();
    std::vector<std::string> dead;
    {
        std::unique_lock lock(mutex_);
        for (auto it = sessions_.begin(); it != sessions_.end();) {
            std::unique_lock rec_lock(it->second->mutex, std::try_to_lock);
            // A session busy in another request is not idle.
            if (rec_lock.owns_lock() && now - it->second->updated > options_.idle_timeout) {
                dead.push_back(it->first);
                rec_lock.unlock();
                it = sessions_.erase(it);
            } else {
                ++it;
            }
        }
    }
    if (journal_)
        for (const auto& id : dead)
            journal_->append({{"event", "expire"}, {"at", format_timestamp(now)}, {"session_id", id}});
    return dead.size();
}

std::size_t SessionService::session_count() const {
    std::shared_lock lock(mutex_);
    return sessions_.size();
}

}  // namespace decisive
