#include "decisive/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"

#include "decisive/assessor.hpp"
#include "decisive/http_api.hpp"
#include "decisive/service.hpp"
#include "decisive/sim.hpp"

namespace decisive {

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string fixed(double v, int digits) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

struct ElicitFlags {
    ElicitationConfig defaults;
    double tau = defaults.tau;
    double kappa = defaults.kappa;
    std::size_t profiles = defaults.particle_count;
    std::size_t max_questions = 0;
    CLI::Option* max_questions_opt = nullptr;
    bool allow_repeat = false;

    ElicitationConfig config() const {
        ElicitationConfig c;
        c.tau = tau;
        c.kappa = kappa;
        c.particle_count = profiles;
        c.allow_repeat_questions = allow_repeat;
        if (max_questions_opt && max_questions_opt->count() > 0) c.max_questions = max_questions;
        try {
            c.validate();
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
        return c;
    }
};

void add_elicitation_flags(CLI::App& app, ElicitFlags& f) {
    app.add_option("--tau", f.tau, "Stop once the top option's probability reaches this")->capture_default_str();
    app.add_option("--kappa", f.kappa, "Sharpness of the answer likelihood")->capture_default_str();
    app.add_option("--profiles", f.profiles, "Number of sampled preference personas (P)")->capture_default_str();
    f.max_questions_opt =
        app.add_option("--max-questions", f.max_questions, "Question budget (default min(20, K(K-1)/2))");
    app.add_flag("--allow-repeat", f.allow_repeat, "Allow asking the same factor pair again");
}

std::pair<std::size_t, std::size_t> parse_dims(const std::string& text) {
    const auto comma = text.find(',');
    auto number = [&](const std::string& part) -> std::size_t {
        std::size_t used = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(part, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != part.size() || v == 0)
            throw UsageError("--synthetic expects M,K with positive integers, got '" + text + "'");
        return v;
    };
    if (comma == std::string::npos) throw UsageError("--synthetic expects M,K, got '" + text + "'");
    return {number(text.substr(0, comma)), number(text.substr(comma + 1))};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) throw std::runtime_error("cannot write " + path.string());
}

void print_ranking(std::ostream& out, const SessionState& state) {
    const auto eu = expected_utilities(state.particles(), state.matrix());
    const auto& labels = state.matrix().option_labels();
    out << "Recommendation:\n";
    std::size_t pos = 1;
    for (std::size_t i : rank_descending(eu))
        out << "  " << pos++ << ". " << labels[i] << "  (expected utility " << fixed(eu[i], 3) << ")\n";
}

std::optional<Response> parse_answer(std::string text) {
    const auto b = text.find_first_not_of(" \t\r");
    const auto e = text.find_last_not_of(" \t\r");
    if (b == std::string::npos) return std::nullopt;
    text = text.substr(b, e - b + 1);
    for (char& c : text) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (text == "a") return Response::PreferA;
    if (text == "b") return Response::PreferB;
    if (text == "n" || text == "=") return Response::Neutral;
    if (text == "both") return Response::BothImportant;
    return parse_response(text);
}

// --- simulate -------------------------------------------------------------

struct SimulateFlags {
    ElicitFlags elicit;
    std::string synthetic;
    std::string scenario;
    std::size_t trials = 100;
    double temperature = 0.05;
    CLI::Option* temperature_opt = nullptr;
    std::uint64_t seed = 0;
    std::size_t jobs = 0;
    std::string out;
};

int cmd_simulate(const SimulateFlags& f, std::ostream& out) {
    TrialConfig config;
    config.elicitation = f.elicit.config();
    config.trials = f.trials;
    config.seed = f.seed;
    config.jobs = f.jobs;
    if (f.temperature_opt->count() > 0) config.user = BradleyTerryUser{f.temperature};
    if (!f.synthetic.empty()) {
        const auto [m, k] = parse_dims(f.synthetic);
        config.source = SyntheticSource{m, k};
    } else if (!f.scenario.empty()) {
        config.source = load_scenario(f.scenario);
    } else {
        throw UsageError("simulate needs --synthetic M,K or --scenario FILE");
    }
    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    const auto result = run_trials(config);
    const auto& r = result.report;
    out << "metric          value\n"
        << "top1            " << fixed(r.top1, 4) << "\n"
        << "top2            " << fixed(r.top2, 4) << "\n"
        << "ndcg3           " << fixed(r.ndcg3, 4) << "\n"
        << "mrr             " << fixed(r.mrr, 4) << "\n"
        << "avg_questions   " << fixed(r.avg_questions, 3) << "\n"
        << "trials          " << r.trials << "\n"
        << "seed            " << config.seed << "\n"
        << "session time    " << fixed(result.mean_session_seconds, 4) << " s (mean)\n";

    if (!f.out.empty()) {
        std::filesystem::path base(f.out);
        if (base.extension() == ".json" || base.extension() == ".csv") base.replace_extension();
        auto json_path = base, csv_path = base;
        json_path += ".json";
        csv_path += ".csv";
        write_file(json_path, report_to_json(r, config).dump(2) + "\n");
        write_file(csv_path, report_to_csv(r, config));
        out << "wrote " << json_path.string() << " and " << csv_path.string() << "\n";
    }
    return 0;
}

// --- session --------------------------------------------------------------

struct SessionFlags {
    ElicitFlags elicit;
    std::string scenario;
    std::uint64_t seed = 0;
};

int cmd_session(const SessionFlags& f, std::istream& in, std::ostream& out) {
    const auto config = f.elicit.config();
    const auto scenario = load_scenario(f.scenario);
    Rng rng(f.seed);
    auto state = SessionState::start(scenario.matrix, config, rng);
    const auto& factors = state.matrix().factor_labels();

    if (!scenario.query.empty()) out << scenario.query << "\n";
    out << state.matrix().rows() << " options, " << state.matrix().cols() << " factors\n";

    while (state.active()) {
        const auto q = select_question(state);
        if (!q) break;
        out << "\nQ" << state.questions_asked() + 1 << ". Which matters more to you?\n"
            << "  a) " << factors[q->factor_a] << "\n"
            << "  b) " << factors[q->factor_b] << "\n";
        std::optional<Response> answer;
        while (!answer) {
            out << "[a / b / neutral / both] > " << std::flush;
            std::string line;
            if (!std::getline(in, line)) {
                out << "\nInput ended before the session finished; ranking from current beliefs.\n";
                print_ranking(out, state);
                return 1;
            }
            answer = parse_answer(line);
            if (!answer) out << "Please answer a, b, neutral or both.\n";
        }
        state.record(*q, *answer);
        out << "confidence " << fixed(state.confidence(), 3) << "\n";
    }

    out << "\nStopped (" << to_string(*state.stop_reason()) << ") after " << state.questions_asked()
        << " question" << (state.questions_asked() == 1 ? "" : "s") << ".\n";
    print_ranking(out, state);
    return 0;
}

// --- serve ----------------------------------------------------------------

struct ServeFlags {
    ElicitFlags elicit;
    std::string addr;
    std::string journal;
    std::string scenario_dir;
    std::string static_dir;
    double idle_hours = 24.0;
};

int cmd_serve(const ServeFlags& f, std::ostream& out) {
    HttpOptions http;
    std::string addr = f.addr;
    if (addr.empty())
        if (const char* env = std::getenv("DECISIVE_ADDR")) addr = env;
    if (!addr.empty()) {
        try {
            parse_address(addr, http);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    if (!(f.idle_hours > 0)) throw UsageError("--idle-hours must be positive");

    ServiceOptions options;
    options.defaults = f.elicit.config();
    options.idle_timeout = std::chrono::seconds(static_cast<long long>(f.idle_hours * 3600));
    if (!f.journal.empty()) options.journal = f.journal;
    if (!f.scenario_dir.empty()) options.scenario_dir = f.scenario_dir;
    if (!f.static_dir.empty()) http.static_dir = f.static_dir;

    SessionService service(std::move(options));
    HttpServer server(service, http);
    const int port = server.bind();
    out << "listening on http://" << http.host << ":" << port << " (" << service.session_count()
        << " sessions restored)" << std::endl;
    server.listen();
    return 0;
}

// --- gen-scenario ---------------------------------------------------------

struct GenFlags {
    std::size_t m = 10;
    std::size_t k = 11;
    std::uint64_t seed = 0;
    bool truth = false;
    std::string out;
};

int cmd_gen_scenario(const GenFlags& f, std::ostream& out) {
    if (f.m == 0 || f.k == 0) throw UsageError("--m and --k must be positive");
    Rng rng(mix_seed(f.seed, 0));
    auto scenario = generate_synthetic_scenario(f.m, f.k, rng);
    if (f.truth) {
        Rng truth_rng(mix_seed(f.seed, 1));
        scenario.ground_truth_prefs = sample_simplex(f.k, 1.0, truth_rng);
    }
    const auto text = serialize_scenario(scenario);
    if (f.out.empty()) {
        out << text;
    } else {
        write_file(f.out, text);
    }
    return 0;
}

// --- score ----------------------------------------------------------------

struct ScoreFlags {
    std::string input;
    std::vector<std::string> replay;
    bool live = false;
    std::vector<std::string> raters;
    std::size_t max_in_flight = 4;
    std::string out;
};

int cmd_score(const ScoreFlags& f, std::ostream& out) {
    if (f.replay.empty() == !f.live) throw UsageError("score needs either --replay FILE... or --live");
    if (f.max_in_flight == 0) throw UsageError("--max-in-flight must be positive");

    std::ifstream in(f.input);
    if (!in) throw std::runtime_error("cannot read " + f.input);
    const auto doc = nlohmann::json::parse(in);
    for (const auto& [key, _] : doc.items())
        if (key != "query" && key != "options" && key != "factors")
            throw std::runtime_error(f.input + ": unknown field " + key);

    Scenario draft{.query = doc.value("query", ""),
                   .options = {},
                   .factors = {},
                   .matrix = ScoringMatrix(1, 1, {0.0}),
                   .raw_assessments = std::nullopt,
                   .ground_truth_prefs = std::nullopt,
                   .label_score_map = std::nullopt};
    for (const auto& o : doc.at("options"))
        draft.options.push_back({o.at("name").get<std::string>(), o.value("documents", std::vector<std::string>{})});
    if (doc.contains("factors"))
        for (const auto& fd : doc["factors"])
            draft.factors.push_back(fd.is_string() ? FactorDescriptor{fd.get<std::string>(), ""}
                                                   : FactorDescriptor{fd.at("name").get<std::string>(),
                                                                      fd.value("description", "")});

    std::vector<std::unique_ptr<AssessorClient>> owned;
    for (const auto& path : f.replay) owned.push_back(ReplayAssessor::from_file(path));
    if (f.live) {
        if (f.raters.empty()) {
            owned.push_back(std::make_unique<HttpAssessor>(HttpAssessor::options_from_environment()));
        } else {
            for (const auto& model : f.raters)
                owned.push_back(std::make_unique<HttpAssessor>(HttpAssessor::options_from_environment(model)));
        }
    }
    std::vector<AssessorClient*> raters;
    for (auto& c : owned) raters.push_back(c.get());

    if (draft.factors.empty()) {
        std::vector<std::string> all_docs;
        for (const auto& o : draft.options) all_docs.insert(all_docs.end(), o.documents.begin(), o.documents.end());
        draft.factors = extract_factors(draft.query, all_docs, *raters.front());
    }

    const auto assessments = score_grid(draft.options, draft.factors, raters, f.max_in_flight);
    const std::size_t m = draft.options.size(), k = draft.factors.size();
    RawAssessments raw(m, std::vector<std::vector<OrdinalLevel>>(k));
    for (const auto& a : assessments) raw[a.option][a.factor] = a.ratings;

    std::vector<std::string> option_labels, factor_labels;
    for (const auto& o : draft.options) option_labels.push_back(o.name);
    for (const auto& fd : draft.factors) factor_labels.push_back(fd.name);
    draft.matrix = assemble_matrix(assessments, m, k, {}, option_labels, factor_labels);
    draft.raw_assessments = std::move(raw);
    draft.validate();

    const auto text = serialize_scenario(draft);
    if (f.out.empty()) {
        out << text;
    } else {
        write_file(f.out, text);
        out << "scored " << m << " options x " << k << " factors with " << raters.size() << " rater"
            << (raters.size() == 1 ? "" : "s") << "; wrote " << f.out << "\n";
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Decision-focused preference elicitation", "decisive"};
    app.require_subcommand(1);

    SimulateFlags sim;
    auto* simulate = app.add_subcommand("simulate", "Run simulated elicitation trials and report metrics");
    add_elicitation_flags(*simulate, sim.elicit);
    auto* synth_opt = simulate->add_option("--synthetic", sim.synthetic, "Fresh M,K synthetic scenario per trial");
    auto* scen_opt = simulate->add_option("--scenario", sim.scenario, "Scenario file shared by all trials");
    synth_opt->excludes(scen_opt);
    simulate->add_option("--trials", sim.trials, "Number of trials")->capture_default_str();
    sim.temperature_opt = simulate->add_option("--temperature", sim.temperature,
                                               "Bradley-Terry answer noise; omit for a deterministic user");
    simulate->add_option("--seed", sim.seed, "Base seed")->capture_default_str();
    simulate->add_option("--jobs", sim.jobs, "Worker threads (0 = all cores)")->capture_default_str();
    simulate->add_option("--out", sim.out, "Write <out>.json and <out>.csv");

    SessionFlags ses;
    auto* session = app.add_subcommand("session", "Answer questions interactively in the terminal");
    add_elicitation_flags(*session, ses.elicit);
    session->add_option("--scenario", ses.scenario, "Scenario file")->required();
    session->add_option("--seed", ses.seed, "Seed for the persona sample")->capture_default_str();

    ServeFlags srv;
    auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
    add_elicitation_flags(*serve, srv.elicit);
    serve->add_option("--addr", srv.addr, "host:port to bind (default $DECISIVE_ADDR or 127.0.0.1:8080)");
    serve->add_option("--journal", srv.journal, "Append-only session journal, replayed on start");
    serve->add_option("--scenario-dir", srv.scenario_dir, "Directory of <id>.json scenarios for scenario_id");
    serve->add_option("--static", srv.static_dir, "Directory served at / (browser client)");
    serve->add_option("--idle-hours", srv.idle_hours, "Expire sessions idle this long")->capture_default_str();

    GenFlags gen;
    auto* gen_scenario = app.add_subcommand("gen-scenario", "Write a synthetic scenario file");
    gen_scenario->add_option("--m", gen.m, "Options")->capture_default_str();
    gen_scenario->add_option("--k", gen.k, "Factors")->capture_default_str();
    gen_scenario->add_option("--seed", gen.seed, "Seed")->capture_default_str();
    gen_scenario->add_flag("--truth", gen.truth, "Include sampled ground-truth preferences");
    gen_scenario->add_option("--out", gen.out, "Output file (default stdout)");

    ScoreFlags sc;
    auto* score = app.add_subcommand("score", "Build a scenario by having raters score option documents");
    score->add_option("--input", sc.input, "JSON with query, options[{name, documents}] and optional factors")
        ->required();
    score->add_option("--replay", sc.replay, "Recorded rater responses (repeatable)");
    score->add_flag("--live", sc.live, "Query raters over HTTP ($DECISIVE_ASSESSOR_URL)");
    score->add_option("--rater", sc.raters, "Model name for --live (repeatable)");
    score->add_option("--max-in-flight", sc.max_in_flight, "Concurrent rater requests")->capture_default_str();
    score->add_option("--out", sc.out, "Output scenario file (default stdout)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return 0;
        }
        err << "error: " << e.what() << "\nrun with --help for usage\n";
        return 2;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(sim, out);
        if (session->parsed()) return cmd_session(ses, in, out);
        if (serve->parsed()) return cmd_serve(srv, out);
        if (gen_scenario->parsed()) return cmd_gen_scenario(gen, out);
        if (score->parsed()) return cmd_score(sc, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\nrun with --help for usage\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace decisive
