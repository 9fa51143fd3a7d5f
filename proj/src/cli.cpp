#include <multisim/cli.hpp>

#include <multisim/errors.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace multisim::cli {

namespace fs = std::filesystem;
using io::json;

std::string to_string(Mode m)
{
    switch (m) {
    case Mode::multisim:
        return "multisim";
    case Mode::ssim:
        return "ssim";
    case Mode::dss:
        return "dss";
    case Mode::multisim_disagree:
        return "multisim-disagree";
    case Mode::multisim_filtered:
        return "multisim-filtered";
    }
    return "multisim";
}

Mode mode_from_string(const std::string& s)
{
    for (const Mode m : {Mode::multisim, Mode::ssim, Mode::dss, Mode::multisim_disagree, Mode::multisim_filtered}) {
        if (to_string(m) == s) {
            return m;
        }
    }
    throw ConfigError("mode: unknown value '" + s + "' (expected multisim, ssim, dss, multisim-disagree or multisim-filtered)");
}

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& message)
{
    throw ConfigError(field + ": " + message);
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!j.is_object()) {
        fail(where.empty() ? "<root>" : where, "must be an object");
    }
    for (const auto& [key, value] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            fail(where.empty() ? key : where + "." + key, "unknown field");
        }
    }
}

double get_number(const json& j, const std::string& key, const std::string& field, double fallback, double lo, double hi)
{
    if (!j.contains(key)) {
        return fallback;
    }
    if (!j[key].is_number()) {
        fail(field, "must be a number");
    }
    const double v = j[key].get<double>();
    if (!std::isfinite(v) || v < lo || v > hi) {
        std::ostringstream os;
        os << "must be in [" << lo << ", " << hi << "], got " << v;
        fail(field, os.str());
    }
    return v;
}

std::uint64_t get_count(const json& j, const std::string& key, const std::string& field, std::uint64_t fallback, std::uint64_t lo)
{
    if (!j.contains(key)) {
        return fallback;
    }
    if (!j[key].is_number_unsigned() && !(j[key].is_number_integer() && j[key].get<std::int64_t>() >= 0)) {
        fail(field, "must be a non-negative integer");
    }
    const auto v = j[key].get<std::uint64_t>();
    if (v < lo) {
        fail(field, "must be at least " + std::to_string(lo) + ", got " + std::to_string(v));
    }
    return v;
}

std::vector<std::string> get_ids(const json& j, const std::string& key, const std::string& field)
{
    if (!j.contains(key)) {
        return {};
    }
    if (!j[key].is_array() || !std::all_of(j[key].begin(), j[key].end(), [](const json& e) { return e.is_string(); })) {
        fail(field, "must be an array of backend ids");
    }
    auto ids = j[key].get<std::vector<std::string>>();
    std::set<std::string> unique(ids.begin(), ids.end());
    if (unique.size() != ids.size()) {
        fail(field, "contains a repeated backend id");
    }
    return ids;
}

} // namespace

CampaignConfig parse_config(const json& j, const fs::path& base_dir)
{
    check_keys(j, "",
               {"schema", "mode", "backends", "backend_definitions", "budget", "time_budget_s", "population", "mutation_rate",
                "mutation_extent", "crossover_rate", "archive_delta", "repopulation_ratio", "oracle_threshold", "xte_cutoff",
                "lookahead", "segments", "seed", "validation", "surrogate"});
    if (j.contains("schema") && j["schema"] != io::config_schema) {
        fail("schema", std::string("expected '") + io::config_schema + "'");
    }
    CampaignConfig c;
    if (!j.contains("mode") || !j["mode"].is_string()) {
        fail("mode", "required string");
    }
    c.mode = mode_from_string(j["mode"].get<std::string>());
    if (!j.contains("backends")) {
        fail("backends", "required");
    }
    c.backends = get_ids(j, "backends", "backends");

    if (j.contains("backend_definitions")) {
        if (!j["backend_definitions"].is_array()) {
            fail("backend_definitions", "must be an array");
        }
        for (std::size_t i = 0; i < j["backend_definitions"].size(); ++i) {
            try {
                c.backend_definitions.push_back(io::backend_from_json(j["backend_definitions"][i]));
            } catch (const std::exception& e) {
                fail("backend_definitions[" + std::to_string(i) + "]", e.what());
            }
        }
    }

    c.budget = get_count(j, "budget", "budget", c.budget, 1);
    if (j.contains("time_budget_s") && !j["time_budget_s"].is_null()) {
        c.time_budget_s = get_number(j, "time_budget_s", "time_budget_s", 0.0, 1e-9, 1e9);
    }
    c.population = get_count(j, "population", "population", c.population, 2);
    c.mutation_rate = get_number(j, "mutation_rate", "mutation_rate", c.mutation_rate, 0.0, 1.0);
    if (j.contains("mutation_extent")) {
        const auto& e = j["mutation_extent"];
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number() || e[0].get<double>() > e[1].get<double>()) {
            fail("mutation_extent", "must be [lo, hi] with lo <= hi");
        }
        c.mutation_extent = {e[0].get<double>(), e[1].get<double>()};
    }
    c.crossover_rate = get_number(j, "crossover_rate", "crossover_rate", c.crossover_rate, 0.0, 1.0);
    c.archive_delta = get_number(j, "archive_delta", "archive_delta", c.archive_delta, 0.0, 1e9);
    c.repopulation_ratio = get_number(j, "repopulation_ratio", "repopulation_ratio", c.repopulation_ratio, 0.0, 1.0);
    c.xte_cutoff = get_number(j, "xte_cutoff", "xte_cutoff", c.xte_cutoff, 1e-9, 1e9);
    c.oracle_threshold = get_number(j, "oracle_threshold", "oracle_threshold", c.oracle_threshold, 0.0, c.xte_cutoff);
    c.lookahead = get_number(j, "lookahead", "lookahead", c.lookahead, 1e-9, 1e9);
    c.segments = get_count(j, "segments", "segments", c.segments, 2);
    c.seed = get_count(j, "seed", "seed", c.seed, 0);

    if (j.contains("validation")) {
        const auto& v = j["validation"];
        check_keys(v, "validation", {"per_cell", "n_runs", "threshold", "held_out"});
        c.validation.per_cell = get_count(v, "per_cell", "validation.per_cell", c.validation.per_cell, 1);
        c.validation.n_runs = get_count(v, "n_runs", "validation.n_runs", c.validation.n_runs, 1);
        c.validation.threshold = get_number(v, "threshold", "validation.threshold", c.validation.threshold, 0.0, 1.0);
        c.validation.held_out = get_ids(v, "held_out", "validation.held_out");
    }
    if (j.contains("surrogate")) {
        const auto& s = j["surrogate"];
        check_keys(s, "surrogate", {"model", "tau", "max_redraws"});
        if (s.contains("model") && !s["model"].is_null()) {
            if (!s["model"].is_string()) {
                fail("surrogate.model", "must be a path string");
            }
            fs::path p = s["model"].get<std::string>();
            c.surrogate.model = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
        }
        c.surrogate.tau = get_number(s, "tau", "surrogate.tau", c.surrogate.tau, 0.0, 1.0);
        c.surrogate.max_redraws = static_cast<int>(get_count(s, "max_redraws", "surrogate.max_redraws", 20, 0));
    }

    const auto known = known_backends(c);
    for (std::size_t i = 0; i < c.backends.size(); ++i) {
        if (std::none_of(known.begin(), known.end(), [&](const auto& b) { return b.id == c.backends[i]; })) {
            fail("backends[" + std::to_string(i) + "]", "unknown backend '" + c.backends[i] + "'");
        }
    }
    for (std::size_t i = 0; i < c.validation.held_out.size(); ++i) {
        const auto& id = c.validation.held_out[i];
        if (std::none_of(known.begin(), known.end(), [&](const auto& b) { return b.id == id; })) {
            fail("validation.held_out[" + std::to_string(i) + "]", "unknown backend '" + id + "'");
        }
        if (std::find(c.backends.begin(), c.backends.end(), id) != c.backends.end()) {
            fail("validation.held_out[" + std::to_string(i) + "]", "backend '" + id + "' is also a search backend");
        }
    }
    const std::size_t n = c.backends.size();
    switch (c.mode) {
    case Mode::ssim:
        if (n != 1) {
            fail("backends", "mode ssim needs exactly 1 backend, got " + std::to_string(n));
        }
        break;
    case Mode::dss:
        if (n != 2) {
            fail("backends", "mode dss needs exactly 2 backends, got " + std::to_string(n));
        }
        break;
    default:
        if (n < 2) {
            fail("backends", "mode " + to_string(c.mode) + " needs at least 2 backends, got " + std::to_string(n));
        }
    }
    if (c.mode == Mode::multisim_filtered && !c.surrogate.model) {
        fail("surrogate.model", "required for mode multisim-filtered");
    }
    return c;
}

CampaignConfig load_config(const fs::path& path)
{
    if (!fs::exists(path)) {
        throw ConfigError("config file " + path.string() + " does not exist");
    }
    json j;
    try {
        j = io::read_json(path);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return parse_config(j, path.parent_path());
}

json to_json(const CampaignConfig& c)
{
    json defs = json::array();
    for (const auto& b : c.backend_definitions) {
        defs.push_back(io::to_json(b));
    }
    return {{"schema", io::config_schema},
            {"mode", to_string(c.mode)},
            {"backends", c.backends},
            {"backend_definitions", std::move(defs)},
            {"budget", c.budget},
            {"time_budget_s", c.time_budget_s ? json(*c.time_budget_s) : json(nullptr)},
            {"population", c.population},
            {"mutation_rate", c.mutation_rate},
            {"mutation_extent", {c.mutation_extent.lo, c.mutation_extent.hi}},
            {"crossover_rate", c.crossover_rate},
            {"archive_delta", c.archive_delta},
            {"repopulation_ratio", c.repopulation_ratio},
            {"oracle_threshold", c.oracle_threshold},
            {"xte_cutoff", c.xte_cutoff},
            {"lookahead", c.lookahead},
            {"segments", c.segments},
            {"seed", c.seed},
            {"validation",
             {{"per_cell", c.validation.per_cell},
              {"n_runs", c.validation.n_runs},
              {"threshold", c.validation.threshold},
              {"held_out", c.validation.held_out}}},
            {"surrogate",
             {{"model", c.surrogate.model ? json(c.surrogate.model->generic_string()) : json(nullptr)},
              {"tau", c.surrogate.tau},
              {"max_redraws", c.surrogate.max_redraws}}}};
}

std::vector<sim::BackendSpec> known_backends(const CampaignConfig& cfg)
{
    auto all = sim::builtin_ensemble();
    for (const auto& d : cfg.backend_definitions) {
        auto it = std::find_if(all.begin(), all.end(), [&](const auto& b) { return b.id == d.id; });
        if (it != all.end()) {
            *it = d;
        } else {
            all.push_back(d);
        }
    }
    return all;
}

search::SearchConfig search_config(const CampaignConfig& c, unsigned jobs)
{
    search::SearchConfig s;
    const auto known = known_backends(c);
    for (const auto& id : c.backends) {
        s.backends.push_back(sim::find_backend(known, id));
    }
    s.budget = c.budget;
    s.time_budget_s = c.time_budget_s;
    s.population = c.population;
    s.mutation_rate = c.mutation_rate;
    s.mutation_extent = c.mutation_extent;
    s.crossover_rate = c.crossover_rate;
    s.archive_delta = c.archive_delta;
    s.repopulation_ratio = c.repopulation_ratio;
    s.oracle_threshold = c.oracle_threshold;
    s.seek_disagreement = c.mode == Mode::multisim_disagree;
    s.road.segments = c.segments;
    s.controller.lookahead = c.lookahead;
    s.controller.xte_cutoff = c.xte_cutoff;
    s.seed = c.seed;
    s.jobs = std::max(1u, jobs);
    s.filter_tau = c.surrogate.tau;
    s.filter_max_redraws = c.surrogate.max_redraws;
    return s;
}

namespace {

std::vector<stats::Point2> front_points(const search::CampaignResult& r)
{
    std::vector<stats::Point2> out;
    for (const auto pos : r.final_population) {
        const auto& f = r.tests[pos].fitness;
        stats::Point2 p;
        if (f.per_sim.size() >= 2) {
            p = {f.per_sim[0], f.per_sim[1]};
        } else if (f.per_sim.size() == 1) {
            p = {f.per_sim[0], f.v_a};
        } else {
            continue;
        }
        if (std::isfinite(p.a) && std::isfinite(p.b)) {
            out.push_back(p);
        }
    }
    return out;
}

std::string front_kind(const search::CampaignResult& r)
{
    return r.backend_ids.size() >= 2 ? "v_1,v_2" : "v_1,v_a";
}

void append(Written& w, const fs::path& p)
{
    w.files.push_back(p);
}

std::string fmt(double v, int precision = 3)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << v;
    return os.str();
}

std::string fmt_opt(const std::optional<double>& v, int precision = 3)
{
    return v ? fmt(*v, precision) : "n/a";
}

} // namespace

Written cmd_run(const CampaignConfig& cfg, const fs::path& out_dir, unsigned jobs)
{
    const auto start = std::chrono::steady_clock::now();
    auto s = search_config(cfg, jobs);
    std::optional<surrogate::Forest> model;
    if (cfg.mode == Mode::multisim_filtered) {
        if (!fs::exists(*cfg.surrogate.model)) {
            throw ConfigError("surrogate.model: file " + cfg.surrogate.model->string() + " does not exist");
        }
        model = io::forest_from_json(io::read_json(*cfg.surrogate.model));
        s.filter_enabled = true;
        s.filter_model = &*model;
    }

    Written w;
    fs::create_directories(out_dir);
    std::vector<analysis::MapTest> tests;
    json doc;
    std::size_t evaluations = 0;
    std::size_t failures = 0;
    if (cfg.mode == Mode::dss) {
        const auto r = baselines::run_dss(s);
        doc = io::to_json(r);
        tests = analysis::map_tests(r, s.road);
        io::write_text(out_dir / "run1.csv", io::campaign_csv(r.run1));
        io::write_text(out_dir / "run2.csv", io::campaign_csv(r.run2));
        append(w, out_dir / "run1.csv");
        append(w, out_dir / "run2.csv");
        evaluations = r.run1.evaluations + r.run2.evaluations + r.migrations.size();
        failures = r.critical.size();
    } else {
        const auto r = cfg.mode == Mode::ssim ? baselines::run_ssim(s) : search::run_campaign(s);
        doc = io::to_json(r);
        tests = analysis::map_tests(r, s.road);
        io::write_text(out_dir / "campaign.csv", io::campaign_csv(r));
        append(w, out_dir / "campaign.csv");
        evaluations = r.evaluations;
        failures = r.agreed_failures.size();
    }
    doc["mode"] = to_string(cfg.mode);
    doc["config"] = to_json(cfg);
    const fs::path main = out_dir / (cfg.mode == Mode::dss ? "dss.json" : "campaign.json");
    io::write_json(main, doc);
    w.files.insert(w.files.begin(), main);

    const auto map = analysis::build_map(std::move(tests));
    io::write_text(out_dir / "feature_map.csv", analysis::map_csv(map));
    io::write_text(out_dir / "feature_map.svg", analysis::map_svg(map, cfg.xte_cutoff));
    append(w, out_dir / "feature_map.csv");
    append(w, out_dir / "feature_map.svg");

    json files = json::array();
    for (const auto& f : w.files) {
        files.push_back(f.filename().string());
    }
    const json manifest = {{"schema", "multisim-manifest/1"},
                           {"version", version},
                           {"mode", to_string(cfg.mode)},
                           {"seed", cfg.seed},
                           {"evaluations", evaluations},
                           {"failures", failures},
                           {"failing_cells", map.failing_cells()},
                           {"wall_time_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()},
                           {"config", to_json(cfg)},
                           {"files", files}};
    io::write_json(out_dir / "manifest.json", manifest);
    append(w, out_dir / "manifest.json");
    return w;
}

json validation_document(const analysis::ValidationReport& report, const std::string& mode, std::size_t budget,
                         const std::vector<stats::Point2>& front)
{
    json j = io::to_json(report);
    j["mode"] = mode;
    j["budget"] = budget;
    const auto fvb = analysis::first_valid_budget(report, budget);
    j["first_valid_budget"] = fvb ? json(*fvb) : json(nullptr);
    json pts = json::array();
    for (const auto& p : front) {
        pts.push_back({p.a, p.b});
    }
    j["front"] = std::move(pts);
    return j;
}

Written cmd_validate(const fs::path& campaign_path, const fs::path& out_dir, const ValidateOptions& opts)
{
    if (!fs::exists(campaign_path)) {
        throw MissingCampaign("campaign file " + campaign_path.string() + " does not exist");
    }
    const json doc = io::read_json(campaign_path);
    CampaignConfig cfg;
    bool have_cfg = false;
    if (doc.contains("config")) {
        cfg = parse_config(doc["config"]);
        have_cfg = true;
    }
    const std::string schema = doc.value("schema", std::string{});

    std::vector<analysis::MapTest> tests;
    std::vector<std::string> search_ids;
    std::vector<stats::Point2> front;
    std::string front_objectives;
    std::size_t budget = 0;
    std::uint64_t seed = 0;
    road::RoadConfig road_cfg;
    road_cfg.segments = cfg.segments;
    if (schema == io::dss_schema) {
        const auto r = io::dss_from_json(doc);
        tests = analysis::map_tests(r, road_cfg);
        search_ids = {r.run1.backend_ids.at(0), r.run2.backend_ids.at(0)};
        budget = r.budget;
        seed = r.seed;
    } else {
        const auto r = io::campaign_from_json(doc);
        tests = analysis::map_tests(r, road_cfg);
        search_ids = r.backend_ids;
        front = front_points(r);
        front_objectives = front_kind(r);
        budget = r.budget;
        seed = r.seed;
    }

    const auto known = known_backends(cfg);
    std::vector<std::string> held_ids = !opts.held_out.empty() ? opts.held_out : cfg.validation.held_out;
    analysis::ValidationConfig vc;
    if (held_ids.empty()) {
        vc.held_out = analysis::held_out_backends(known, search_ids);
    } else {
        for (const auto& id : held_ids) {
            if (std::none_of(known.begin(), known.end(), [&](const auto& b) { return b.id == id; })) {
                throw ConfigError("held-out backend '" + id + "' is unknown");
            }
            vc.held_out.push_back(sim::find_backend(known, id));
        }
    }
    vc.search_backends = search_ids;
    vc.n_runs = opts.n_runs.value_or(cfg.validation.n_runs);
    vc.threshold = opts.threshold.value_or(cfg.validation.threshold);
    vc.seed = seed;
    vc.jobs = std::max(1u, opts.jobs);
    vc.road = road_cfg;
    vc.controller.lookahead = cfg.lookahead;
    vc.controller.xte_cutoff = cfg.xte_cutoff;
    vc.oracle_threshold = cfg.oracle_threshold;
    const std::size_t per_cell = opts.per_cell.value_or(cfg.validation.per_cell);

    const auto map = analysis::build_map(std::move(tests));
    Rng rng(derive_seed({seed, 0x53454CULL}));
    std::vector<analysis::MapTest> selected;
    for (const auto i : analysis::select_for_validation(map, per_cell, rng, road_cfg)) {
        selected.push_back(map.tests[i]);
    }
    const auto report = analysis::validate(selected, vc);

    const std::string mode = have_cfg ? to_string(cfg.mode) : (schema == io::dss_schema ? "dss" : "multisim");
    json out = validation_document(report, mode, budget, front);
    out["front_objectives"] = front_objectives;
    out["search_backends"] = search_ids;
    out["seed"] = seed;
    out["per_cell"] = per_cell;
    out["failing_cells"] = map.failing_cells();

    Written w;
    fs::create_directories(out_dir);
    io::write_json(out_dir / "validation.json", out);
    append(w, out_dir / "validation.json");

    std::ostringstream t;
    t << "mode               " << mode << "\n";
    t << "search backends    ";
    for (const auto& id : search_ids) {
        t << id << ' ';
    }
    t << "\nheld-out backends  ";
    for (const auto& id : report.held_out) {
        t << id << ' ';
    }
    t << "\nfailing cells      " << map.failing_cells() << "\n";
    t << "selected           " << report.failures.size() << "\n";
    t << "n_valid            " << report.n_valid << "\n";
    t << "valid_rate         " << fmt_opt(report.valid_rate) << "\n";
    t << "first_valid_budget " << fmt_opt(analysis::first_valid_budget(report, budget)) << "\n\n";
    t << std::left << std::setw(8) << "eval" << std::setw(12) << "curvature" << std::setw(7) << "turns";
    for (const auto& id : report.held_out) {
        t << std::setw(10) << ("rate_" + id);
    }
    t << "valid\n";
    for (const auto& f : report.failures) {
        t << std::setw(8) << f.evaluation_index << std::setw(12) << fmt(f.cell.curvature_center(), 2) << std::setw(7) << f.cell.turn_count;
        for (const auto& o : f.outcomes) {
            t << std::setw(10) << fmt(o.failure_rate, 2);
        }
        t << (f.valid ? "yes" : "no") << "\n";
    }
    io::write_text(out_dir / "validation.txt", t.str());
    append(w, out_dir / "validation.txt");
    return w;
}

namespace {

surrogate::Dataset load_csv_dataset(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    surrogate::Dataset d;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::vector<double> values;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(cell, &used));
                numeric = numeric && used == cell.size();
            } catch (const std::exception&) {
                numeric = false;
            }
        }
        if (!numeric) {
            if (line_no == 1) {
                continue; // header
            }
            throw Error(path.string() + ":" + std::to_string(line_no) + ": non-numeric value");
        }
        if (values.size() < 2 || (width != 0 && values.size() != width)) {
            throw Error(path.string() + ":" + std::to_string(line_no) + ": inconsistent column count");
        }
        width = values.size();
        const double label = values.back();
        if (label != 0.0 && label != 1.0) {
            throw Error(path.string() + ":" + std::to_string(line_no) + ": label must be 0 or 1");
        }
        values.pop_back();
        d.rows.push_back(std::move(values));
        d.labels.push_back(static_cast<int>(label));
    }
    d.provenance.push_back(path.filename().string());
    return d;
}

} // namespace

surrogate::Dataset load_dataset(const std::vector<fs::path>& inputs)
{
    if (inputs.empty()) {
        throw ConfigError("no dataset inputs given");
    }
    std::vector<search::CampaignResult> campaigns;
    std::vector<std::string> ids;
    surrogate::Dataset csv;
    for (const auto& p : inputs) {
        if (!fs::exists(p)) {
            throw MissingCampaign("input " + p.string() + " does not exist");
        }
        if (p.extension() == ".csv") {
            auto d = load_csv_dataset(p);
            if (!csv.rows.empty() && !d.rows.empty() && d.rows.front().size() != csv.rows.front().size()) {
                throw Error("CSV inputs disagree on the feature count");
            }
            csv.rows.insert(csv.rows.end(), d.rows.begin(), d.rows.end());
            csv.labels.insert(csv.labels.end(), d.labels.begin(), d.labels.end());
            csv.provenance.insert(csv.provenance.end(), d.provenance.begin(), d.provenance.end());
            continue;
        }
        const json j = io::read_json(p);
        if (j.value("schema", std::string{}) == io::dss_schema) {
            throw SingleBackendCampaign("campaign '" + p.filename().string() + "' consists of single-backend searches");
        }
        campaigns.push_back(io::campaign_from_json(j));
        ids.push_back(p.filename().string());
    }
    if (campaigns.empty()) {
        return csv;
    }
    if (!csv.rows.empty()) {
        throw ConfigError("mixing CSV datasets and campaign files is not supported");
    }
    return surrogate::build_dataset(campaigns, ids);
}

namespace {

json dataset_summary(const surrogate::Dataset& d)
{
    return {{"rows", d.size()},
            {"agreements", d.count(0)},
            {"disagreements", d.count(1)},
            {"removed_duplicates", d.removed_duplicates},
            {"provenance", d.provenance}};
}

std::string cv_table(const surrogate::CvReport& cv, const json& summary, const std::string& kind)
{
    std::ostringstream t;
    t << "model " << kind << "\n";
    t << "rows " << summary["rows"] << " (agreement " << summary["agreements"] << ", disagreement " << summary["disagreements"]
      << ", duplicates removed " << summary["removed_duplicates"] << ")\n\n";
    t << std::left << std::setw(6) << "fold" << std::setw(8) << "rows" << std::setw(10) << "positive" << std::setw(8) << "F1"
      << "AUC\n";
    for (std::size_t i = 0; i < cv.folds.size(); ++i) {
        const auto& f = cv.folds[i];
        t << std::setw(6) << i + 1 << std::setw(8) << f.test_rows << std::setw(10) << f.test_positives << std::setw(8) << fmt(f.f1)
          << fmt(f.auc) << "\n";
    }
    t << std::setw(24) << "mean" << std::setw(8) << fmt(cv.mean_f1) << fmt(cv.mean_auc) << "\n";
    return t.str();
}

} // namespace

Written cmd_surrogate_train(const std::vector<fs::path>& inputs, const fs::path& out_dir, const SurrogateOptions& opts)
{
    const auto data = load_dataset(inputs);
    const auto forest = surrogate::train_forest(data, opts.params, opts.seed, std::max(1u, opts.jobs));
    const auto cv = surrogate::cross_validate(data, surrogate::forest_trainer(opts.params, opts.seed, std::max(1u, opts.jobs)),
                                              opts.folds, opts.seed);
    json model = io::to_json(forest);
    model["cv"] = io::to_json(cv);
    model["folds"] = opts.folds;
    model["dataset"] = dataset_summary(data);

    Written w;
    fs::create_directories(out_dir);
    io::write_json(out_dir / "model.json", model);
    io::write_text(out_dir / "cv.txt", cv_table(cv, model["dataset"], model["kind"].get<std::string>()));
    append(w, out_dir / "model.json");
    append(w, out_dir / "cv.txt");
    return w;
}

Written cmd_surrogate_eval(const fs::path& model_path, const std::vector<fs::path>& inputs, const fs::path& out_dir, unsigned jobs)
{
    if (!fs::exists(model_path)) {
        throw MissingCampaign("model file " + model_path.string() + " does not exist");
    }
    const json mj = io::read_json(model_path);
    const auto forest = io::forest_from_json(mj);
    const auto data = load_dataset(inputs);
    if (!data.rows.empty() && data.rows.front().size() != forest.n_features()) {
        throw Error("dataset has " + std::to_string(data.rows.front().size()) + " features, model expects " +
                    std::to_string(forest.n_features()));
    }
    const std::size_t folds = mj.value("folds", std::size_t{5});
    const auto cv = surrogate::cross_validate(data, surrogate::forest_trainer(forest.params(), forest.seed(), std::max(1u, jobs)),
                                              folds, forest.seed());

    std::vector<int> predicted;
    std::vector<double> scores;
    for (const auto& row : data.rows) {
        scores.push_back(forest.predict_proba(row));
        predicted.push_back(scores.back() > 0.5 ? 1 : 0);
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        correct += predicted[i] == data.labels[i] ? 1 : 0;
    }
    const json cvj = io::to_json(cv);
    json out = {{"schema", "multisim-surrogate-eval/1"},
                {"model", model_path.filename().string()},
                {"dataset", dataset_summary(data)},
                {"cv", cvj},
                {"reproduces_stored_cv", mj.contains("cv") && mj["cv"] == cvj},
                {"model_accuracy", data.size() ? static_cast<double>(correct) / static_cast<double>(data.size()) : 0.0},
                {"model_f1", surrogate::f1_score(data.labels, predicted)}};
    if (data.count(0) > 0 && data.count(1) > 0) {
        out["model_auc"] = surrogate::auc_roc(data.labels, scores);
    }
    Written w;
    fs::create_directories(out_dir);
    io::write_json(out_dir / "evaluation.json", out);
    append(w, out_dir / "evaluation.json");
    return w;
}

namespace {

struct RunMetrics {
    double n_valid = 0.0;
    std::optional<double> valid_rate;
    std::optional<double> first_valid_budget;
    std::vector<stats::Point2> front;
    std::string front_objectives;
};

RunMetrics load_metrics(const fs::path& p)
{
    if (!fs::exists(p)) {
        throw MissingCampaign("report " + p.string() + " does not exist");
    }
    const json j = io::read_json(p);
    io::expect_schema(j, io::validation_schema);
    RunMetrics m;
    m.n_valid = static_cast<double>(j.at("n_valid").get<std::size_t>());
    if (!j.at("valid_rate").is_null()) {
        m.valid_rate = j["valid_rate"].get<double>();
    }
    if (j.contains("first_valid_budget") && !j["first_valid_budget"].is_null()) {
        m.first_valid_budget = j["first_valid_budget"].get<double>();
    }
    for (const auto& pt : j.value("front", json::array())) {
        m.front.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
    }
    m.front_objectives = j.value("front_objectives", std::string{});
    return m;
}

json compare_samples(const std::vector<double>& x, const std::vector<double>& y)
{
    json c = {{"n_first", x.size()}, {"n_second", y.size()}};
    if (!x.empty() && !y.empty()) {
        const auto e = stats::a12(x, y);
        c["a12"] = e.a12;
        c["magnitude"] = stats::to_string(e.magnitude);
        c["favours"] = stats::to_string(e.favours);
    } else {
        c["a12"] = nullptr;
        c["magnitude"] = nullptr;
        c["favours"] = nullptr;
    }
    c["p"] = x.size() >= 3 && y.size() >= 3 ? json(stats::wilcoxon_ranksum(x, y)) : json(nullptr);
    return c;
}

double mean(const std::vector<double>& v)
{
    double s = 0.0;
    for (const double x : v) {
        s += x;
    }
    return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
}

} // namespace

Written cmd_compare(const std::vector<ResultSet>& sets, const fs::path& out_dir)
{
    if (sets.size() < 2) {
        throw InsufficientSeeds("comparison needs at least two result sets, got " + std::to_string(sets.size()));
    }
    for (const auto& s : sets) {
        if (s.reports.size() < 3) {
            throw InsufficientSeeds("result set '" + s.label + "' has " + std::to_string(s.reports.size()) + " seeds; at least 3 are needed");
        }
    }

    std::vector<std::vector<RunMetrics>> runs;
    for (const auto& s : sets) {
        std::vector<RunMetrics> r;
        for (const auto& p : s.reports) {
            r.push_back(load_metrics(p));
        }
        runs.push_back(std::move(r));
    }

    using Getter = std::function<std::optional<double>(const RunMetrics&)>;
    const std::vector<std::pair<std::string, Getter>> metrics = {
        {"n_valid", [](const RunMetrics& m) { return std::optional<double>(m.n_valid); }},
        {"valid_rate", [](const RunMetrics& m) { return m.valid_rate; }},
        {"first_valid_budget", [](const RunMetrics& m) { return m.first_valid_budget; }},
    };
    auto sample = [&](std::size_t set, const Getter& g) {
        std::vector<double> v;
        for (const auto& m : runs[set]) {
            if (const auto x = g(m)) {
                v.push_back(*x);
            }
        }
        return v;
    };

    json summary = json::array();
    for (std::size_t s = 0; s < sets.size(); ++s) {
        json row = {{"label", sets[s].label}, {"seeds", runs[s].size()}};
        for (const auto& [name, g] : metrics) {
            const auto v = sample(s, g);
            row["mean_" + name] = v.empty() ? json(nullptr) : json(mean(v));
            row["n_" + name] = v.size();
        }
        summary.push_back(std::move(row));
    }

    json pairs = json::array();
    std::ostringstream t;
    t << std::left << std::setw(22) << "pair" << std::setw(20) << "metric" << std::setw(10) << "mean_1" << std::setw(10) << "mean_2"
      << std::setw(9) << "p" << std::setw(8) << "A12" << std::setw(12) << "magnitude" << "favours\n";
    auto line = [&](const std::string& pair, const std::string& metric, const std::vector<double>& x, const std::vector<double>& y,
                    const json& c) {
        t << std::setw(22) << pair << std::setw(20) << metric << std::setw(10) << (x.empty() ? "n/a" : fmt(mean(x)))
          << std::setw(10) << (y.empty() ? "n/a" : fmt(mean(y))) << std::setw(9) << (c["p"].is_null() ? "n/a" : fmt(c["p"].get<double>()))
          << std::setw(8) << (c["a12"].is_null() ? "n/a" : fmt(c["a12"].get<double>())) << std::setw(12)
          << (c["magnitude"].is_null() ? "n/a" : c["magnitude"].get<std::string>())
          << (c["favours"].is_null() ? "n/a" : c["favours"].get<std::string>()) << "\n";
    };

    for (std::size_t a = 0; a < sets.size(); ++a) {
        for (std::size_t b = a + 1; b < sets.size(); ++b) {
            const std::string pair_name = sets[a].label + " vs " + sets[b].label;
            json pj = {{"first", sets[a].label}, {"second", sets[b].label}};
            json mj = json::object();
            for (const auto& [name, g] : metrics) {
                const auto x = sample(a, g);
                const auto y = sample(b, g);
                mj[name] = compare_samples(x, y);
                line(pair_name, name, x, y, mj[name]);
            }

            const auto has_front = [&](std::size_t s) {
                return std::all_of(runs[s].begin(), runs[s].end(), [&](const RunMetrics& m) {
                    return !m.front.empty() && m.front_objectives == runs[a].front().front_objectives;
                });
            };
            if (has_front(a) && has_front(b)) {
                std::vector<stats::Point2> all;
                for (const std::size_t s : {a, b}) {
                    for (const auto& m : runs[s]) {
                        all.insert(all.end(), m.front.begin(), m.front.end());
                    }
                }
                const auto ref = stats::reference_point(all);
                std::vector<double> hx;
                std::vector<double> hy;
                for (const auto& m : runs[a]) {
                    hx.push_back(stats::hypervolume_2d(m.front, ref));
                }
                for (const auto& m : runs[b]) {
                    hy.push_back(stats::hypervolume_2d(m.front, ref));
                }
                json hv = compare_samples(hx, hy);
                hv["objectives"] = runs[a].front().front_objectives;
                hv["reference"] = {ref.a, ref.b};
                hv["first_values"] = hx;
                hv["second_values"] = hy;
                mj["hypervolume"] = hv;
                line(pair_name, "hypervolume", hx, hy, hv);
            }
            pj["metrics"] = std::move(mj);
            pairs.push_back(std::move(pj));
        }
    }

    json report = {{"schema", io::comparison_schema}, {"sets", summary}, {"pairs", pairs}};
    Written w;
    fs::create_directories(out_dir);
    io::write_json(out_dir / "comparison.json", report);
    io::write_text(out_dir / "comparison.txt", t.str());
    append(w, out_dir / "comparison.json");
    append(w, out_dir / "comparison.txt");
    return w;
}

std::string backends_table()
{
    std::ostringstream t;
    t << std::left << std::setw(4) << "id" << std::setw(18) << "dynamics" << std::setw(7) << "steer" << std::setw(10) << "rate_lim"
      << std::setw(7) << "delay" << std::setw(7) << "noise" << "description\n";
    for (const auto& b : sim::builtin_ensemble()) {
        t << std::setw(4) << b.id << std::setw(18) << sim::to_string(b.dynamics) << std::setw(7) << fmt(b.max_steer_deg, 0)
          << std::setw(10) << (b.steer_rate_limit_deg_s ? fmt(*b.steer_rate_limit_deg_s, 0) : "-") << std::setw(7)
          << b.actuator_delay_steps << std::setw(7) << fmt(b.noise_std, 2) << b.description << "\n";
    }
    return t.str();
}

} // namespace multisim::cli
