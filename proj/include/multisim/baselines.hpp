#pragma once
/**
 * @file   baselines.hpp
 * @brief  Single-backend search and the two-search cross-migration baseline.
 */

#include <multisim/ensemble_search.hpp>

#include <cstddef>
#include <vector>

namespace multisim::baselines {

/// Same GA as run_campaign with exactly one backend; fitness is (v_1, v_a).
search::CampaignResult run_ssim(const search::SearchConfig& cfg);

enum class Origin { run1, run2 };

/// A failing test of one run re-executed once on the other run's backend.
struct Migration {
    Origin origin = Origin::run1;
    std::size_t test = 0;            ///< position in the origin run's tests
    std::size_t migration_index = 0; ///< 1-based within its origin
    std::size_t global_index = 0;    ///< sequential evaluation count
    std::uint64_t run_seed = 0;
    sim::Evaluation evaluation;      ///< on the opposite backend
};

struct DssResult {
    search::CampaignResult run1; ///< searched on backends[0]
    search::CampaignResult run2; ///< searched on backends[1]
    std::vector<Migration> migrations;
    std::vector<std::size_t> critical; ///< positions in migrations
    std::size_t budget = 0;
    std::uint64_t seed = 0;
};

/// Global evaluation count of a migrated test: A + B + a for run1 tests,
/// A + B + A + b for run2 tests.
std::size_t dss_evaluation_index(Origin origin, std::size_t run1_total, std::size_t run2_total, std::size_t local_index);

/// Integer origin code (1 or 2) for serialized data; throws UnknownOrigin otherwise.
Origin origin_from_code(int code);
int origin_code(Origin origin) noexcept;

/// Two independent searches with a quarter of the budget each, followed by
/// migration of every failing test (run1's first). Needs exactly two backends.
DssResult run_dss(const search::SearchConfig& cfg);

} // namespace multisim::baselines
