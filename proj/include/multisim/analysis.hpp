#pragma once
/**
 * @file   analysis.hpp
 * @brief  Curvature x turn-count feature maps, selection of failures for
 *         validation, re-execution on held-out backends, and the
 *         effectiveness/efficiency metrics derived from it.
 */

#include <multisim/baselines.hpp>
#include <multisim/road.hpp>
#include <multisim/simbench.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace multisim::analysis {

inline constexpr double curvature_step = 0.04;
inline constexpr double curvature_half_width = 0.02;

/// A test as placed on a feature map.
struct MapTest {
    std::size_t evaluation_index = 0; ///< unique within one campaign
    road::RoadGenotype genotype;
    road::RoadFeatures features;
    double fitness = 0.0; ///< in [-cutoff, 0]
    bool failed = false;
};

struct CellKey {
    long curvature_index = 0; ///< cell centre is curvature_index * curvature_step
    int turn_count = 0;

    double curvature_center() const noexcept { return static_cast<double>(curvature_index) * curvature_step; }
    friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct Cell {
    std::vector<std::size_t> members; ///< positions in FeatureMap::tests
    double worst_fitness = 0.0;
    bool failing = false;
};

struct FeatureMap {
    std::vector<MapTest> tests;
    std::map<CellKey, Cell> cells;

    std::size_t failing_cells() const noexcept;
};

/// Index of the cell whose half-open interval [c - 0.02, c + 0.02) holds the curvature.
long curvature_bucket(double curvature) noexcept;

FeatureMap build_map(std::vector<MapTest> tests);

/// MultiSim and SSIM: a test fails when every search backend failed; its map
/// fitness is the mildest per-backend fitness.
std::vector<MapTest> map_tests(const search::CampaignResult& campaign, const road::RoadConfig& cfg = {});

/// DSS: only critical tests fail, indexed by their migration evaluation count.
std::vector<MapTest> map_tests(const baselines::DssResult& dss, const road::RoadConfig& cfg = {});

/// Up to per_cell failing tests drawn uniformly from each failing cell, after
/// dropping duplicates (normalised distance < 1e-9). Returns positions in map.tests.
std::vector<std::size_t> select_for_validation(const FeatureMap& map, std::size_t per_cell, Rng& rng,
                                               const road::RoadConfig& cfg = {});

struct BackendOutcome {
    std::string backend_id;
    std::vector<bool> verdicts;       ///< one per run, true = failed
    std::vector<double> max_abs_xte;  ///< one per run
    std::vector<std::uint64_t> run_seeds;
    double failure_rate = 0.0;
};

struct FailureReport {
    std::size_t evaluation_index = 0;
    road::RoadGenotype genotype;
    CellKey cell;
    std::vector<BackendOutcome> outcomes; ///< one per held-out backend
    bool valid = false;
};

struct ValidationReport {
    std::vector<FailureReport> failures;
    std::vector<std::string> held_out;
    std::size_t n_runs = 0;
    double threshold = 1.0;
    std::size_t n_valid = 0;
    std::optional<double> valid_rate; ///< empty when nothing was selected
};

struct ValidationConfig {
    std::vector<sim::BackendSpec> held_out;
    std::vector<std::string> search_backends;
    std::size_t n_runs = 5;
    double threshold = 1.0;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
    road::RoadConfig road{};
    sim::ControllerConfig controller{};
    double oracle_threshold = 2.2;
};

/// Held-out backends: those in `all` not named in `search_ids`, in order.
std::vector<sim::BackendSpec> held_out_backends(const std::vector<sim::BackendSpec>& all,
                                                const std::vector<std::string>& search_ids);

/// Re-executes each failure n_runs times on every held-out backend, then judges.
/// Throws BackendOverlap when a search backend is held out.
ValidationReport validate(const std::vector<MapTest>& failures, const ValidationConfig& cfg);

/// Sets failure rates, the valid flag (rate >= threshold on every backend) and aggregates.
void judge(ValidationReport& report);

/// Evaluation index of the earliest valid failure divided by the budget.
std::optional<double> first_valid_budget(const ValidationReport& report, std::size_t budget);

/// cell_curvature,turn_count,n_tests,worst_fitness,failing
std::string map_csv(const FeatureMap& map);

/// Heat map, green at fitness 0 to red at -cutoff, white where uncovered.
std::string map_svg(const FeatureMap& map, double cutoff = 3.0);

} // namespace multisim::analysis
