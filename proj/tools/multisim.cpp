// Command-line entry point. Exit codes: 0 success, 1 usage/config error, 2 runtime error.

#include <multisim/cli.hpp>
#include <multisim/errors.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace multisim;

namespace {

constexpr int usage_error = 1;
constexpr int runtime_error = 2;

unsigned default_jobs()
{
    if (const char* env = std::getenv("MULTISIM_JOBS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) {
                return static_cast<unsigned>(v);
            }
        } catch (const std::exception&) {
        }
        throw ConfigError("MULTISIM_JOBS must be a positive integer");
    }
    return 1;
}

fs::path output_dir(const std::string& flag)
{
    if (const char* env = std::getenv("MULTISIM_OUT"); env && *env) {
        return env;
    }
    if (flag.empty()) {
        throw ConfigError("--out is required (or set MULTISIM_OUT)");
    }
    return flag;
}

void report(const cli::Written& w)
{
    for (const auto& f : w.files) {
        std::cout << f.string() << "\n";
    }
}

std::vector<cli::ResultSet> parse_sets(const std::vector<std::string>& specs)
{
    std::vector<cli::ResultSet> sets;
    for (const auto& spec : specs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError("result set '" + spec + "' must look like LABEL=report1.json,report2.json,...");
        }
        cli::ResultSet s;
        s.label = spec.substr(0, eq);
        std::stringstream ss(spec.substr(eq + 1));
        std::string path;
        while (std::getline(ss, path, ',')) {
            if (!path.empty()) {
                s.reports.emplace_back(path);
            }
        }
        sets.push_back(std::move(s));
    }
    return sets;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Ensemble-of-backends search-based test generation for a lane-keeping controller"};
    app.set_version_flag("--version", cli::version);
    app.require_subcommand(1);

    std::string out;
    unsigned jobs = 0;

    auto* run = app.add_subcommand("run", "Run the campaign described by a config file");
    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    run->add_option("config", config_path, "Campaign config (JSON)")->required();
    run->add_option("--out", out, "Output directory (MULTISIM_OUT overrides)");
    run->add_option("--seed", seed_override, "Override the config seed");
    run->add_option("--jobs", jobs, "Parallel rollouts (default MULTISIM_JOBS or 1)");

    auto* validate = app.add_subcommand("validate", "Re-execute a campaign's failures on held-out backends");
    std::string campaign_path;
    std::vector<std::string> held_out;
    cli::ValidateOptions vopts;
    validate->add_option("campaign", campaign_path, "campaign.json or dss.json")->required();
    validate->add_option("--out", out, "Output directory (MULTISIM_OUT overrides)");
    validate->add_option("--held-out", held_out, "Held-out backend ids (default: every backend not searched)")->delimiter(',');
    validate->add_option("--per-cell", vopts.per_cell, "Failures drawn per failing cell");
    validate->add_option("--runs", vopts.n_runs, "Re-executions per held-out backend");
    validate->add_option("--threshold", vopts.threshold, "Required failure rate in [0,1]")->check(CLI::Range(0.0, 1.0));
    validate->add_option("--jobs", jobs, "Parallel re-executions");

    auto* surr = app.add_subcommand("surrogate", "Train or evaluate the disagreement classifier");
    surr->require_subcommand(1);
    auto* train = surr->add_subcommand("train", "Train a forest and cross-validate it");
    std::vector<std::string> inputs;
    cli::SurrogateOptions sopts;
    train->add_option("inputs", inputs, "Campaign JSON files or feature CSVs (last column = label)")->required();
    train->add_option("--out", out, "Output directory (MULTISIM_OUT overrides)");
    train->add_option("--trees", sopts.params.n_trees, "Number of trees; 1 gives a decision tree")->check(CLI::PositiveNumber);
    train->add_option("--max-depth", sopts.params.max_depth, "Maximum tree depth");
    train->add_option("--min-leaf", sopts.params.min_leaf, "Minimum rows per leaf")->check(CLI::PositiveNumber);
    train->add_option("--max-features", sopts.params.max_features, "Features tried per split (0 = sqrt)");
    train->add_option("--folds", sopts.folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
    train->add_option("--seed", sopts.seed, "Training and fold-assignment seed");
    train->add_option("--jobs", jobs, "Parallel tree training");
    auto* eval = surr->add_subcommand("eval", "Re-run a saved model's cross-validation and score it");
    std::string model_path;
    eval->add_option("--model", model_path, "model.json written by 'surrogate train'")->required();
    eval->add_option("inputs", inputs, "Campaign JSON files or feature CSVs")->required();
    eval->add_option("--out", out, "Output directory (MULTISIM_OUT overrides)");
    eval->add_option("--jobs", jobs, "Parallel tree training");

    auto* compare = app.add_subcommand("compare", "Statistical comparison of result sets");
    std::vector<std::string> set_specs;
    compare->add_option("sets", set_specs, "LABEL=report.json,report.json,... (validation reports, one per seed)")->required();
    compare->add_option("--out", out, "Output directory (MULTISIM_OUT overrides)");

    auto* backends = app.add_subcommand("backends", "List the built-in backends");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : usage_error;
    }

    try {
        const unsigned j = jobs > 0 ? jobs : default_jobs();
        if (*run) {
            auto cfg = cli::load_config(config_path);
            if (seed_override) {
                cfg.seed = *seed_override;
            }
            report(cli::cmd_run(cfg, output_dir(out), j));
        } else if (*validate) {
            vopts.held_out = held_out;
            vopts.jobs = j;
            report(cli::cmd_validate(campaign_path, output_dir(out), vopts));
        } else if (*train) {
            sopts.jobs = j;
            report(cli::cmd_surrogate_train({inputs.begin(), inputs.end()}, output_dir(out), sopts));
        } else if (*eval) {
            report(cli::cmd_surrogate_eval(model_path, {inputs.begin(), inputs.end()}, output_dir(out), j));
        } else if (*compare) {
            const auto w = cli::cmd_compare(parse_sets(set_specs), output_dir(out));
            report(w);
            std::ifstream table(w.files.at(1));
            std::cout << "\n" << table.rdbuf();
        } else if (*backends) {
            std::cout << cli::backends_table();
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return usage_error;
    } catch (const MissingCampaign& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage_error;
    } catch (const BackendOverlap& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage_error;
    } catch (const InsufficientSeeds& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage_error;
    } catch (const BudgetTooSmall& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return usage_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return runtime_error;
    }
    return 0;
}
