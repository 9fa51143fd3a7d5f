#include <multisim/io.hpp>

#include <multisim/errors.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace multisim::io {

namespace {

json number_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

double number_or_neg_inf(const json& j)
{
    return j.is_null() ? -std::numeric_limits<double>::infinity() : j.get<double>();
}

json to_json(const sim::Evaluation& e)
{
    return {{"fitness", e.fitness}, {"max_abs_xte", e.max_abs_xte}, {"failed", e.failed}};
}

sim::Evaluation evaluation_from_json(const json& j)
{
    return {j.at("fitness").get<double>(), j.at("failed").get<bool>(), j.at("max_abs_xte").get<double>()};
}

} // namespace

json to_json(const road::RoadGenotype& g)
{
    return {{"angles", g.angles}, {"lengths", g.lengths}};
}

road::RoadGenotype genotype_from_json(const json& j)
{
    road::RoadGenotype g;
    g.angles = j.at("angles").get<std::vector<double>>();
    g.lengths = j.at("lengths").get<std::vector<double>>();
    if (g.angles.size() != g.lengths.size()) {
        throw Error("genotype has " + std::to_string(g.angles.size()) + " angles but " + std::to_string(g.lengths.size()) + " lengths");
    }
    return g;
}

json to_json(const sim::BackendSpec& b)
{
    json j = {{"id", b.id},
              {"description", b.description},
              {"dynamics", sim::to_string(b.dynamics)},
              {"max_steer_deg", b.max_steer_deg},
              {"steer_rate_limit_deg_s", b.steer_rate_limit_deg_s ? json(*b.steer_rate_limit_deg_s) : json(nullptr)},
              {"actuator_delay_steps", b.actuator_delay_steps},
              {"speed", b.speed},
              {"timestep", b.timestep},
              {"noise_std", b.noise_std},
              {"wheelbase", b.wheelbase}};
    if (b.dynamics == sim::DynamicsKind::dynamic_slip) {
        j["mass"] = b.mass;
        j["yaw_inertia"] = b.yaw_inertia;
        j["cg_to_front"] = b.cg_to_front;
        j["cornering_front"] = b.cornering_front;
        j["cornering_rear"] = b.cornering_rear;
        j["substeps"] = b.substeps;
    }
    return j;
}

sim::BackendSpec backend_from_json(const json& j)
{
    sim::BackendSpec b;
    b.id = j.at("id").get<std::string>();
    b.description = j.value("description", std::string{});
    b.dynamics = sim::dynamics_from_string(j.value("dynamics", std::string{"kinematic-ideal"}));
    b.max_steer_deg = j.value("max_steer_deg", b.max_steer_deg);
    if (j.contains("steer_rate_limit_deg_s") && !j["steer_rate_limit_deg_s"].is_null()) {
        b.steer_rate_limit_deg_s = j["steer_rate_limit_deg_s"].get<double>();
    }
    b.actuator_delay_steps = j.value("actuator_delay_steps", b.actuator_delay_steps);
    b.speed = j.value("speed", b.speed);
    b.timestep = j.value("timestep", b.timestep);
    b.noise_std = j.value("noise_std", b.noise_std);
    b.wheelbase = j.value("wheelbase", b.wheelbase);
    b.mass = j.value("mass", b.mass);
    b.yaw_inertia = j.value("yaw_inertia", b.yaw_inertia);
    b.cg_to_front = j.value("cg_to_front", b.cg_to_front);
    b.cornering_front = j.value("cornering_front", b.cornering_front);
    b.cornering_rear = j.value("cornering_rear", b.cornering_rear);
    b.substeps = j.value("substeps", b.substeps);
    b.check();
    return b;
}

json to_json(const search::CampaignResult& r)
{
    json tests = json::array();
    for (const auto& t : r.tests) {
        json evals = json::array();
        for (std::size_t k = 0; k < t.evaluations.size(); ++k) {
            json e = to_json(t.evaluations[k]);
            e["backend"] = k < r.backend_ids.size() ? r.backend_ids[k] : std::string{};
            e["run_seed"] = k < t.run_seeds.size() ? t.run_seeds[k] : 0;
            evals.push_back(std::move(e));
        }
        tests.push_back({{"index", t.index},
                         {"generation", t.generation},
                         {"genotype", to_json(t.genotype)},
                         {"fitness", {{"per_sim", t.fitness.per_sim}, {"v_d", t.fitness.v_d}, {"v_a", number_or_null(t.fitness.v_a)}}},
                         {"evaluations", std::move(evals)}});
    }
    return {{"schema", campaign_schema},
            {"seed", r.seed},
            {"budget", r.budget},
            {"evaluations", r.evaluations},
            {"discarded", r.discarded},
            {"backends", r.backend_ids},
            {"tests", std::move(tests)},
            {"agreed_failures", r.agreed_failures},
            {"final_population", r.final_population}};
}

search::CampaignResult campaign_from_json(const json& j)
{
    expect_schema(j, campaign_schema);
    search::CampaignResult r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.budget = j.at("budget").get<std::size_t>();
    r.evaluations = j.at("evaluations").get<std::size_t>();
    r.discarded = j.value("discarded", std::size_t{0});
    r.backend_ids = j.at("backends").get<std::vector<std::string>>();
    for (const auto& jt : j.at("tests")) {
        search::TestRecord t;
        t.index = jt.at("index").get<std::size_t>();
        t.generation = jt.at("generation").get<std::size_t>();
        t.genotype = genotype_from_json(jt.at("genotype"));
        const auto& f = jt.at("fitness");
        t.fitness.per_sim = f.at("per_sim").get<std::vector<double>>();
        t.fitness.v_d = f.at("v_d").get<double>();
        t.fitness.v_a = number_or_neg_inf(f.at("v_a"));
        for (const auto& e : jt.at("evaluations")) {
            t.evaluations.push_back(evaluation_from_json(e));
            t.run_seeds.push_back(e.value("run_seed", std::uint64_t{0}));
        }
        r.tests.push_back(std::move(t));
    }
    r.agreed_failures = j.at("agreed_failures").get<std::vector<std::size_t>>();
    r.final_population = j.value("final_population", std::vector<std::size_t>{});
    return r;
}

json to_json(const baselines::DssResult& r)
{
    json entries = json::array();
    for (const auto& m : r.migrations) {
        entries.push_back({{"origin", baselines::origin_code(m.origin)},
                           {"test", m.test},
                           {"migration_index", m.migration_index},
                           {"global_index", m.global_index},
                           {"run_seed", m.run_seed},
                           {"evaluation", to_json(m.evaluation)}});
    }
    return {{"schema", dss_schema},
            {"seed", r.seed},
            {"budget", r.budget},
            {"run1", to_json(r.run1)},
            {"run2", to_json(r.run2)},
            {"migration", {{"entries", std::move(entries)}, {"critical", r.critical}}}};
}

baselines::DssResult dss_from_json(const json& j)
{
    expect_schema(j, dss_schema);
    baselines::DssResult r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.budget = j.at("budget").get<std::size_t>();
    r.run1 = campaign_from_json(j.at("run1"));
    r.run2 = campaign_from_json(j.at("run2"));
    for (const auto& e : j.at("migration").at("entries")) {
        baselines::Migration m;
        m.origin = baselines::origin_from_code(e.at("origin").get<int>());
        m.test = e.at("test").get<std::size_t>();
        m.migration_index = e.at("migration_index").get<std::size_t>();
        m.global_index = e.at("global_index").get<std::size_t>();
        m.run_seed = e.at("run_seed").get<std::uint64_t>();
        m.evaluation = evaluation_from_json(e.at("evaluation"));
        r.migrations.push_back(m);
    }
    r.critical = j.at("migration").at("critical").get<std::vector<std::size_t>>();
    return r;
}

json to_json(const analysis::ValidationReport& r)
{
    json failures = json::array();
    for (const auto& f : r.failures) {
        json outcomes = json::array();
        for (const auto& o : f.outcomes) {
            outcomes.push_back({{"backend", o.backend_id},
                                {"verdicts", o.verdicts},
                                {"max_abs_xte", o.max_abs_xte},
                                {"run_seeds", o.run_seeds},
                                {"failure_rate", o.failure_rate}});
        }
        failures.push_back({{"evaluation_index", f.evaluation_index},
                            {"genotype", to_json(f.genotype)},
                            {"cell",
                             {{"curvature_index", f.cell.curvature_index},
                              {"curvature_center", f.cell.curvature_center()},
                              {"turn_count", f.cell.turn_count}}},
                            {"outcomes", std::move(outcomes)},
                            {"valid", f.valid}});
    }
    return {{"schema", validation_schema},
            {"held_out", r.held_out},
            {"n_runs", r.n_runs},
            {"threshold", r.threshold},
            {"selected", r.failures.size()},
            {"n_valid", r.n_valid},
            {"valid_rate", r.valid_rate ? json(*r.valid_rate) : json(nullptr)},
            {"failures", std::move(failures)}};
}

analysis::ValidationReport validation_from_json(const json& j)
{
    expect_schema(j, validation_schema);
    analysis::ValidationReport r;
    r.held_out = j.at("held_out").get<std::vector<std::string>>();
    r.n_runs = j.at("n_runs").get<std::size_t>();
    r.threshold = j.at("threshold").get<double>();
    for (const auto& jf : j.at("failures")) {
        analysis::FailureReport f;
        f.evaluation_index = jf.at("evaluation_index").get<std::size_t>();
        f.genotype = genotype_from_json(jf.at("genotype"));
        f.cell.curvature_index = jf.at("cell").at("curvature_index").get<long>();
        f.cell.turn_count = jf.at("cell").at("turn_count").get<int>();
        for (const auto& jo : jf.at("outcomes")) {
            analysis::BackendOutcome o;
            o.backend_id = jo.at("backend").get<std::string>();
            o.verdicts = jo.at("verdicts").get<std::vector<bool>>();
            o.max_abs_xte = jo.at("max_abs_xte").get<std::vector<double>>();
            o.run_seeds = jo.at("run_seeds").get<std::vector<std::uint64_t>>();
            f.outcomes.push_back(std::move(o));
        }
        r.failures.push_back(std::move(f));
    }
    analysis::judge(r);
    return r;
}

json to_json(const surrogate::Forest& f)
{
    json trees = json::array();
    for (const auto& t : f.trees()) {
        json nodes = json::array();
        for (const auto& n : t.nodes()) {
            if (n.feature < 0) {
                nodes.push_back({{"leaf", true}, {"negatives", n.negatives}, {"positives", n.positives}, {"vote", n.vote}});
            } else {
                nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
            }
        }
        trees.push_back(std::move(nodes));
    }
    const auto& p = f.params();
    return {{"schema", model_schema},
            {"kind", p.n_trees == 1 ? "decision-tree" : "random-forest"},
            {"seed", f.seed()},
            {"n_features", f.n_features()},
            {"params", {{"n_trees", p.n_trees}, {"max_depth", p.max_depth}, {"min_leaf", p.min_leaf}, {"max_features", p.max_features}}},
            {"trees", std::move(trees)}};
}

surrogate::Forest forest_from_json(const json& j)
{
    expect_schema(j, model_schema);
    surrogate::ForestParams p;
    const auto& jp = j.at("params");
    p.n_trees = jp.at("n_trees").get<std::size_t>();
    p.max_depth = jp.at("max_depth").get<std::size_t>();
    p.min_leaf = jp.at("min_leaf").get<std::size_t>();
    p.max_features = jp.at("max_features").get<std::size_t>();
    const auto n_features = j.at("n_features").get<std::size_t>();
    std::vector<surrogate::Tree> trees;
    for (const auto& jt : j.at("trees")) {
        std::vector<surrogate::Node> nodes;
        for (const auto& jn : jt) {
            surrogate::Node n;
            if (jn.value("leaf", false)) {
                n.negatives = jn.at("negatives").get<std::size_t>();
                n.positives = jn.at("positives").get<std::size_t>();
                n.vote = jn.at("vote").get<int>();
            } else {
                n.feature = jn.at("feature").get<int>();
                n.threshold = jn.at("threshold").get<double>();
                n.left = jn.at("left").get<int>();
                n.right = jn.at("right").get<int>();
            }
            nodes.push_back(n);
        }
        for (const auto& n : nodes) {
            const auto bad = [&](int c) { return c < 0 || static_cast<std::size_t>(c) >= nodes.size(); };
            if (n.feature >= 0 && (bad(n.left) || bad(n.right) || static_cast<std::size_t>(n.feature) >= n_features)) {
                throw Error("model contains a node with an out-of-range child or feature");
            }
        }
        if (nodes.empty()) {
            throw Error("model contains an empty tree");
        }
        trees.emplace_back(std::move(nodes));
    }
    return surrogate::Forest(std::move(trees), p, j.at("seed").get<std::uint64_t>(), n_features);
}

json to_json(const surrogate::CvReport& r)
{
    json folds = json::array();
    for (const auto& f : r.folds) {
        folds.push_back({{"test_rows", f.test_rows}, {"test_positives", f.test_positives}, {"f1", f.f1}, {"auc", f.auc}});
    }
    return {{"folds", std::move(folds)}, {"mean_f1", r.mean_f1}, {"mean_auc", r.mean_auc}};
}

surrogate::CvReport cv_from_json(const json& j)
{
    surrogate::CvReport r;
    for (const auto& f : j.at("folds")) {
        r.folds.push_back({f.at("test_rows").get<std::size_t>(), f.at("test_positives").get<std::size_t>(), f.at("f1").get<double>(),
                           f.at("auc").get<double>()});
    }
    r.mean_f1 = j.at("mean_f1").get<double>();
    r.mean_auc = j.at("mean_auc").get<double>();
    return r;
}

std::string campaign_csv(const search::CampaignResult& r)
{
    std::ostringstream os;
    os.precision(17);
    const std::size_t n = r.tests.empty() ? 0 : r.tests.front().genotype.segments();
    os << "index,generation";
    for (std::size_t i = 1; i <= n; ++i) {
        os << ",angle_" << i;
    }
    for (std::size_t i = 1; i <= n; ++i) {
        os << ",length_" << i;
    }
    for (const auto& id : r.backend_ids) {
        os << ",fitness_" << id << ",failed_" << id;
    }
    os << ",v_d,v_a,all_failed\n";
    for (const auto& t : r.tests) {
        os << t.index << ',' << t.generation;
        for (const double a : t.genotype.angles) {
            os << ',' << a;
        }
        for (const double l : t.genotype.lengths) {
            os << ',' << l;
        }
        for (const auto& e : t.evaluations) {
            os << ',' << e.fitness << ',' << (e.failed ? 1 : 0);
        }
        os << ',' << t.fitness.v_d << ',';
        if (std::isfinite(t.fitness.v_a)) {
            os << t.fitness.v_a;
        }
        os << ',' << (t.all_failed() ? 1 : 0) << '\n';
    }
    return os.str();
}

json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << text;
}

void write_json(const std::filesystem::path& path, const json& j)
{
    write_text(path, j.dump(2) + "\n");
}

void expect_schema(const json& j, const std::string& schema)
{
    const std::string found = j.is_object() ? j.value("schema", std::string{"<none>"}) : std::string{"<not an object>"};
    if (found != schema) {
        throw Error("expected a '" + schema + "' document, found '" + found + "'");
    }
}

} // namespace multisim::io
