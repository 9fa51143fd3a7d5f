#pragma once
/**
 * @file   io.hpp
 * @brief  Versioned JSON documents and CSV tables for campaigns, DSS results,
 *         validation reports and surrogate models.
 *
 * Every document carries a "schema" tag. Non-finite numbers (the empty-archive
 * sentinel) are written as null and read back as -inf.
 */

#include <multisim/analysis.hpp>
#include <multisim/baselines.hpp>
#include <multisim/surrogate.hpp>

#include <json.hpp>

#include <filesystem>
#include <string>

namespace multisim::io {

using nlohmann::json;

inline constexpr const char* campaign_schema = "multisim-campaign/1";
inline constexpr const char* dss_schema = "multisim-dss/1";
inline constexpr const char* validation_schema = "multisim-validation/1";
inline constexpr const char* model_schema = "multisim-forest/1";
inline constexpr const char* config_schema = "multisim-config/1";
inline constexpr const char* comparison_schema = "multisim-comparison/1";

json to_json(const road::RoadGenotype& g);
road::RoadGenotype genotype_from_json(const json& j);

json to_json(const sim::BackendSpec& b);
sim::BackendSpec backend_from_json(const json& j);

json to_json(const search::CampaignResult& r);
search::CampaignResult campaign_from_json(const json& j);

json to_json(const baselines::DssResult& r);
baselines::DssResult dss_from_json(const json& j);

json to_json(const analysis::ValidationReport& r);
analysis::ValidationReport validation_from_json(const json& j);

json to_json(const surrogate::Forest& f);
surrogate::Forest forest_from_json(const json& j);

json to_json(const surrogate::CvReport& r);
surrogate::CvReport cv_from_json(const json& j);

/// One row per test: index, generation, genes, per-backend fitness and verdicts, v_d, v_a.
std::string campaign_csv(const search::CampaignResult& r);

/// Throws Error on unreadable files or malformed JSON.
json read_json(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const json& j);

/// Checks the schema tag; throws Error naming both tags on mismatch.
void expect_schema(const json& j, const std::string& schema);

} // namespace multisim::io
