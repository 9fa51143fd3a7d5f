#pragma once
/**
 * @file   surrogate.hpp
 * @brief  Disagreement datasets, a random-forest classifier and k-fold evaluation.
 */

#include <multisim/ensemble_search.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace multisim::surrogate {

struct Dataset {
    std::vector<std::vector<double>> rows; ///< flat genotypes [angles..., lengths...]
    std::vector<int> labels;               ///< 1 = backends disagree
    std::vector<std::string> provenance;
    std::size_t removed_duplicates = 0;

    std::size_t size() const noexcept { return rows.size(); }
    std::size_t count(int label) const noexcept;
    Dataset subset(std::span<const std::size_t> indices) const;
};

/// One row per distinct genotype; the first occurrence wins.
/// Throws SingleBackendCampaign for a campaign with fewer than two backends.
Dataset build_dataset(const std::vector<search::CampaignResult>& campaigns, const std::vector<std::string>& ids = {});

struct ForestParams {
    std::size_t n_trees = 100;
    std::size_t max_depth = 12;
    std::size_t min_leaf = 2;
    std::size_t max_features = 0; ///< 0 = floor(sqrt(d)); a single tree always uses all features
};

struct Node {
    int feature = -1; ///< -1 for a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::size_t negatives = 0; ///< training rows reaching a leaf
    std::size_t positives = 0;
    int vote = 0;
};

class Tree {
public:
    Tree() = default;
    explicit Tree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

    int predict(std::span<const double> x) const;
    const std::vector<Node>& nodes() const noexcept { return nodes_; }

private:
    std::vector<Node> nodes_;
};

/// Gini tree on the given rows (duplicates allowed, as produced by bootstrapping).
/// Pure input yields a single leaf.
Tree train_tree(const Dataset& data, std::span<const std::size_t> rows, const ForestParams& params, std::size_t features_per_split,
                Rng& rng);

class Forest : public search::DisagreementPredictor {
public:
    Forest() = default;
    Forest(std::vector<Tree> trees, ForestParams params, std::uint64_t seed, std::size_t n_features)
        : trees_(std::move(trees)), params_(params), seed_(seed), n_features_(n_features)
    {
    }

    /// Fraction of trees voting disagreement.
    double predict_proba(std::span<const double> x) const;
    double predict_disagreement(const road::RoadGenotype& genotype) const override;

    const std::vector<Tree>& trees() const noexcept { return trees_; }
    const ForestParams& params() const noexcept { return params_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t n_features() const noexcept { return n_features_; }

private:
    std::vector<Tree> trees_;
    ForestParams params_;
    std::uint64_t seed_ = 0;
    std::size_t n_features_ = 0;
};

/// Bootstrap per tree (none for a single tree). Throws DegenerateDataset if a class has fewer than two rows.
Forest train_forest(const Dataset& data, const ForestParams& params, std::uint64_t seed, unsigned jobs = 1);

/// Positive class = 1; predictions at score > 0.5.
double f1_score(std::span<const int> labels, std::span<const int> predicted);

/// Mann-Whitney AUC; tied scores share mid-ranks. Needs both classes present.
double auc_roc(std::span<const int> labels, std::span<const double> scores);

using Scorer = std::function<double(std::span<const double>)>;
using Trainer = std::function<Scorer(const Dataset&)>;

struct FoldScore {
    std::size_t test_rows = 0;
    std::size_t test_positives = 0;
    double f1 = 0.0;
    double auc = 0.0;
};

struct CvReport {
    std::vector<FoldScore> folds;
    double mean_f1 = 0.0;
    double mean_auc = 0.0;
};

/// Fold assignment: each class shuffled under the seed, then dealt round-robin.
std::vector<std::size_t> stratified_folds(const Dataset& data, std::size_t k, std::uint64_t seed);

/// Throws FoldTooSmall if a class has fewer than k rows.
CvReport cross_validate(const Dataset& data, const Trainer& trainer, std::size_t k, std::uint64_t seed);

/// Trainer for the forest family.
Trainer forest_trainer(ForestParams params, std::uint64_t seed, unsigned jobs = 1);

} // namespace multisim::surrogate
