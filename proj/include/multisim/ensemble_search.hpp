#pragma once
/**
 * @file   ensemble_search.hpp
 * @brief  Genetic search that evaluates every candidate road on an ensemble
 *         of backends and keeps the failures all backends agree on.
 *
 * Fitness of a test on j backends is (v_1..v_j, v_d, v_a): the per-backend
 * fitness values, their mean pairwise distance, and the (negated) distance
 * to the diversity archive. Everything is minimised. With one backend v_d
 * is omitted, which is the single-simulator baseline.
 */

#include <multisim/road.hpp>
#include <multisim/simbench.hpp>

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace multisim::search {

/// Predicts the probability that backends disagree on a road.
class DisagreementPredictor {
public:
    virtual ~DisagreementPredictor() = default;
    virtual double predict_disagreement(const road::RoadGenotype& genotype) const = 0;
};

enum class FilterDecision { execute, discard };

/// discard iff probability > tau. Throws ModelMissing for a null model.
FilterDecision surrogate_filter_hook(const road::RoadGenotype& candidate, const DisagreementPredictor* model, double tau);

struct FitnessVector {
    std::vector<double> per_sim;
    double v_d = 0.0;  ///< mean pairwise |v_k - v_l|; 0 for a single backend
    double v_a = -std::numeric_limits<double>::infinity(); ///< negated archive distance

    /// Minimisation vector: per_sim, then v_d (negated when seeking disagreement, absent for one backend), then v_a.
    std::vector<double> objectives(bool seek_disagreement = false) const;
};

/// Sum over pairs k<l of |v_k - v_l|, divided by C(j, 2). Zero for j < 2.
double mean_pairwise_distance(std::span<const double> values);

class Archive {
public:
    explicit Archive(double delta, road::RoadConfig cfg = {}) : delta_(delta), cfg_(std::move(cfg)) {}

    /// +inf when empty.
    double distance_to(const road::RoadGenotype& genotype) const;

    /// Admits the genotype iff its distance to the archive exceeds delta.
    bool add(const road::RoadGenotype& genotype);

    double delta() const noexcept { return delta_; }
    std::size_t size() const noexcept { return entries_.size(); }
    const std::vector<std::vector<double>>& entries() const noexcept { return entries_; }

private:
    double delta_;
    road::RoadConfig cfg_;
    std::vector<std::vector<double>> entries_; ///< normalised genotypes
};

double distance_to_archive(const road::RoadGenotype& genotype, const Archive& archive);

/// Pareto dominance for minimisation.
bool dominates(std::span<const double> a, std::span<const double> b) noexcept;

/// Fronts of indices, best first.
std::vector<std::vector<std::size_t>> nondominated_sort(const std::vector<std::vector<double>>& objectives);

/// Crowding distance of each member of `front` (same order); boundary points get +inf.
std::vector<double> crowding_distance(const std::vector<std::vector<double>>& objectives, std::span<const std::size_t> front);

struct Individual {
    road::RoadGenotype genotype;
    std::optional<FitnessVector> fitness;
    std::optional<std::size_t> test_index; ///< into CampaignResult::tests
    std::size_t rank = 0;
    double crowding = 0.0;
};

struct Population {
    std::vector<Individual> individuals;
    std::size_t generation = 0;
};

/// Keeps target_size individuals by front order, truncating the splitting
/// front by descending crowding distance. Sets rank and crowding on the survivors.
std::vector<Individual> survive(std::vector<Individual> candidates, std::size_t target_size, bool seek_disagreement = false);

/// Replaces ceil(ratio * dominated) of the worst-ranked dominated
/// individuals (rank > 0) with fresh unevaluated random roads.
std::vector<Individual> repopulate(std::vector<Individual> population, Rng& rng, double ratio, const road::RoadConfig& cfg);

struct SearchConfig {
    std::vector<sim::BackendSpec> backends;
    std::size_t budget = 400; ///< test evaluations (one test on all backends counts once)
    std::optional<double> time_budget_s;
    std::size_t population = 20;
    double mutation_rate = 0.1;
    road::AngleRange mutation_extent{};
    double crossover_rate = 0.6;
    double archive_delta = 0.45;
    double repopulation_ratio = 0.2;
    double oracle_threshold = 2.2;
    bool seek_disagreement = false;
    road::RoadConfig road{};
    sim::ControllerConfig controller{};
    std::uint64_t seed = 1;
    unsigned jobs = 1;

    bool filter_enabled = false;
    const DisagreementPredictor* filter_model = nullptr;
    double filter_tau = 0.7;
    int filter_max_redraws = 20;
};

struct TestRecord {
    std::size_t index = 0; ///< 1-based evaluation count
    std::size_t generation = 0;
    road::RoadGenotype genotype;
    FitnessVector fitness;
    std::vector<sim::Evaluation> evaluations; ///< per backend, config order
    std::vector<std::uint64_t> run_seeds;     ///< per backend; replays the trace

    bool all_failed() const noexcept;
    bool any_failed() const noexcept;
};

struct CampaignResult {
    std::vector<std::string> backend_ids;
    std::vector<TestRecord> tests;
    std::vector<std::size_t> agreed_failures; ///< positions in tests
    std::vector<std::size_t> final_population; ///< positions in tests
    std::size_t evaluations = 0;
    std::size_t budget = 0;
    std::size_t discarded = 0; ///< candidates dropped by the surrogate filter
    double wall_time_s = 0.0;
    std::uint64_t seed = 0;
};

/// Seed of the rollout of test `index` on backend `backend`.
std::uint64_t rollout_seed(std::uint64_t campaign_seed, std::size_t index, std::size_t backend);

/// Simulates each genotype on every backend, then assigns fitness vectors
/// and updates the archive in batch order.
struct BatchEvaluation {
    std::vector<FitnessVector> fitness;
    std::vector<std::vector<sim::Evaluation>> evaluations;
    std::vector<std::vector<std::uint64_t>> run_seeds;
};

BatchEvaluation evaluate_multisim(std::span<const road::RoadGenotype> batch, const SearchConfig& cfg, Archive& archive,
                                  std::size_t first_index);

/// Throws BudgetTooSmall, ModelMissing, or Error for a malformed config.
CampaignResult run_campaign(const SearchConfig& cfg);

} // namespace multisim::search
