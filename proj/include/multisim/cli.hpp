#pragma once
/**
 * @file   cli.hpp
 * @brief  Campaign configuration and the command implementations behind the
 *         command-line tool. Each command reads explicit paths, writes its
 *         outputs into an explicit directory and returns the written paths.
 */

#include <multisim/io.hpp>
#include <multisim/stats.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace multisim::cli {

inline constexpr const char* version = "0.1.0";

enum class Mode { multisim, ssim, dss, multisim_disagree, multisim_filtered };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct ValidationSettings {
    std::size_t per_cell = 3;
    std::size_t n_runs = 5;
    double threshold = 1.0;
    std::vector<std::string> held_out; ///< empty = every known backend not used by the search
};

struct SurrogateSettings {
    std::optional<std::filesystem::path> model;
    double tau = 0.7;
    int max_redraws = 20;
};

struct CampaignConfig {
    Mode mode = Mode::multisim;
    std::vector<std::string> backends;
    std::vector<sim::BackendSpec> backend_definitions; ///< extra or overriding backends
    std::size_t budget = 400;
    std::optional<double> time_budget_s;
    std::size_t population = 20;
    double mutation_rate = 0.1;
    road::AngleRange mutation_extent{};
    double crossover_rate = 0.6;
    double archive_delta = 0.45;
    double repopulation_ratio = 0.2;
    double oracle_threshold = 2.2;
    double xte_cutoff = 3.0;
    double lookahead = 8.0;
    std::size_t segments = 5;
    std::uint64_t seed = 1;
    ValidationSettings validation;
    SurrogateSettings surrogate;
};

/// Field-level validation; throws ConfigError naming the offending field.
/// Relative model paths resolve against base_dir.
CampaignConfig parse_config(const io::json& j, const std::filesystem::path& base_dir = {});
CampaignConfig load_config(const std::filesystem::path& path);
io::json to_json(const CampaignConfig& cfg);

/// Built-ins overridden or extended by the config's definitions.
std::vector<sim::BackendSpec> known_backends(const CampaignConfig& cfg);

search::SearchConfig search_config(const CampaignConfig& cfg, unsigned jobs);

struct Written {
    std::vector<std::filesystem::path> files;
};

/// Runs the configured campaign; writes campaign.json (or dss.json), campaign.csv,
/// feature_map.csv, feature_map.svg and manifest.json into out_dir.
Written cmd_run(const CampaignConfig& cfg, const std::filesystem::path& out_dir, unsigned jobs);

struct ValidateOptions {
    std::vector<std::string> held_out; ///< overrides the config's list
    std::optional<std::size_t> per_cell;
    std::optional<std::size_t> n_runs;
    std::optional<double> threshold;
    unsigned jobs = 1;
};

/// Selects failures from the campaign's feature map and re-executes them on the
/// held-out backends; writes validation.json and validation.txt.
/// Throws MissingCampaign or BackendOverlap.
Written cmd_validate(const std::filesystem::path& campaign_path, const std::filesystem::path& out_dir, const ValidateOptions& opts);

/// Builds a validation report JSON with campaign context (budget, first_valid_budget, front).
io::json validation_document(const analysis::ValidationReport& report, const std::string& mode, std::size_t budget,
                             const std::vector<stats::Point2>& front);

/// Rows from campaign JSON files, or from CSV files with feature columns and a final 0/1 label.
surrogate::Dataset load_dataset(const std::vector<std::filesystem::path>& inputs);

struct SurrogateOptions {
    surrogate::ForestParams params;
    std::size_t folds = 5;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
};

/// Trains on all rows, cross-validates, writes model.json (with the CV scores) and cv.txt.
Written cmd_surrogate_train(const std::vector<std::filesystem::path>& inputs, const std::filesystem::path& out_dir,
                            const SurrogateOptions& opts);

/// Re-runs the stored CV protocol on the inputs and scores the saved model; writes evaluation.json.
Written cmd_surrogate_eval(const std::filesystem::path& model_path, const std::vector<std::filesystem::path>& inputs,
                           const std::filesystem::path& out_dir, unsigned jobs);

struct ResultSet {
    std::string label;
    std::vector<std::filesystem::path> reports; ///< validation.json files, one per seed
};

/// Pairwise Wilcoxon + A12 on n_valid, valid_rate and first_valid_budget, plus
/// hypervolume where fronts exist. Writes comparison.json and comparison.txt.
/// Throws InsufficientSeeds for fewer than two sets or fewer than three reports per set.
Written cmd_compare(const std::vector<ResultSet>& sets, const std::filesystem::path& out_dir);

/// Aligned table of the built-in backends.
std::string backends_table();

} // namespace multisim::cli
