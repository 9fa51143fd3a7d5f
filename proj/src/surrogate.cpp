#include <multisim/surrogate.hpp>

#include <multisim/errors.hpp>
#include <multisim/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <set>

namespace multisim::surrogate {

std::size_t Dataset::count(int label) const noexcept
{
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const
{
    Dataset out;
    out.provenance = provenance;
    for (const auto i : indices) {
        out.rows.push_back(rows[i]);
        out.labels.push_back(labels[i]);
    }
    return out;
}

Dataset build_dataset(const std::vector<search::CampaignResult>& campaigns, const std::vector<std::string>& ids)
{
    Dataset out;
    std::set<std::vector<double>> seen;
    for (std::size_t c = 0; c < campaigns.size(); ++c) {
        const auto& campaign = campaigns[c];
        const std::string id = c < ids.size() ? ids[c] : "campaign-" + std::to_string(c + 1);
        if (campaign.backend_ids.size() < 2) {
            throw SingleBackendCampaign("campaign '" + id + "' ran on a single backend; disagreement is undefined");
        }
        out.provenance.push_back(id);
        for (const auto& t : campaign.tests) {
            auto row = t.genotype.flat();
            if (!seen.insert(row).second) {
                ++out.removed_duplicates;
                continue;
            }
            out.rows.push_back(std::move(row));
            out.labels.push_back(t.any_failed() && !t.all_failed() ? 1 : 0);
        }
    }
    return out;
}

int Tree::predict(std::span<const double> x) const
{
    int i = 0;
    while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
        const auto& n = nodes_[static_cast<std::size_t>(i)];
        i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<std::size_t>(i)].vote;
}

namespace {

double gini(double pos, double total)
{
    if (total <= 0.0) {
        return 0.0;
    }
    const double p = pos / total;
    return 2.0 * p * (1.0 - p);
}

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = std::numeric_limits<double>::infinity();
};

class TreeBuilder {
public:
    TreeBuilder(const Dataset& data, const ForestParams& params, std::size_t features_per_split, Rng& rng)
        : data_(data), params_(params), mtry_(features_per_split), rng_(rng)
    {
    }

    std::vector<Node> build(std::vector<std::size_t> rows)
    {
        grow(rows, 0);
        return std::move(nodes_);
    }

private:
    int grow(std::vector<std::size_t>& rows, std::size_t depth)
    {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        std::size_t pos = 0;
        for (const auto r : rows) {
            pos += data_.labels[r] == 1 ? 1 : 0;
        }
        const std::size_t neg = rows.size() - pos;

        Split best;
        if (depth < params_.max_depth && pos > 0 && neg > 0 && rows.size() >= 2 * params_.min_leaf) {
            best = find_split(rows, pos);
        }
        if (best.feature < 0) {
            auto& leaf = nodes_[static_cast<std::size_t>(id)];
            leaf.negatives = neg;
            leaf.positives = pos;
            leaf.vote = pos > neg ? 1 : 0;
            return id;
        }

        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        const auto f = static_cast<std::size_t>(best.feature);
        for (const auto r : rows) {
            (data_.rows[r][f] <= best.threshold ? left : right).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        auto& node = nodes_[static_cast<std::size_t>(id)];
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    Split find_split(const std::vector<std::size_t>& rows, std::size_t pos_total)
    {
        const std::size_t d = data_.rows[rows.front()].size();
        std::vector<std::size_t> features(d);
        std::iota(features.begin(), features.end(), 0);
        const std::size_t m = std::min(mtry_, d);
        for (std::size_t k = 0; k < m; ++k) {
            std::swap(features[k], features[k + rng_.index(d - k)]);
        }

        Split best;
        const double n = static_cast<double>(rows.size());
        const double parent = gini(static_cast<double>(pos_total), n);
        std::vector<std::size_t> order(rows);
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t f = features[k];
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return data_.rows[a][f] < data_.rows[b][f]; });
            std::size_t left_pos = 0;
            for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                left_pos += data_.labels[order[i]] == 1 ? 1 : 0;
                const double lo = data_.rows[order[i]][f];
                const double hi = data_.rows[order[i + 1]][f];
                const std::size_t nl = i + 1;
                const std::size_t nr = order.size() - nl;
                if (!(lo < hi) || nl < params_.min_leaf || nr < params_.min_leaf) {
                    continue;
                }
                const double imp = (static_cast<double>(nl) * gini(static_cast<double>(left_pos), static_cast<double>(nl)) +
                                    static_cast<double>(nr) *
                                        gini(static_cast<double>(pos_total - left_pos), static_cast<double>(nr))) /
                                   n;
                if (imp < best.impurity) {
                    best.impurity = imp;
                    best.feature = static_cast<int>(f);
                    best.threshold = lo + (hi - lo) / 2.0;
                }
            }
        }
        if (best.feature >= 0 && !(best.impurity < parent)) {
            best.feature = -1;
        }
        return best;
    }

    const Dataset& data_;
    const ForestParams& params_;
    std::size_t mtry_;
    Rng& rng_;
    std::vector<Node> nodes_;
};

} // namespace

Tree train_tree(const Dataset& data, std::span<const std::size_t> rows, const ForestParams& params, std::size_t features_per_split, Rng& rng)
{
    if (rows.empty()) {
        throw DegenerateDataset("cannot train a tree on zero rows");
    }
    return Tree(TreeBuilder(data, params, features_per_split, rng).build({rows.begin(), rows.end()}));
}

double Forest::predict_proba(std::span<const double> x) const
{
    if (trees_.empty()) {
        return 0.0;
    }
    std::size_t votes = 0;
    for (const auto& t : trees_) {
        votes += t.predict(x) == 1 ? 1 : 0;
    }
    return static_cast<double>(votes) / static_cast<double>(trees_.size());
}

double Forest::predict_disagreement(const road::RoadGenotype& genotype) const
{
    return predict_proba(genotype.flat());
}

Forest train_forest(const Dataset& data, const ForestParams& params, std::uint64_t seed, unsigned jobs)
{
    if (data.count(0) < 2 || data.count(1) < 2) {
        throw DegenerateDataset("training needs at least two rows of each class (agreement " + std::to_string(data.count(0)) +
                                ", disagreement " + std::to_string(data.count(1)) + ")");
    }
    if (params.n_trees == 0 || params.min_leaf == 0) {
        throw Error("forest needs n_trees >= 1 and min_leaf >= 1");
    }
    const std::size_t d = data.rows.front().size();
    const bool single = params.n_trees == 1;
    std::size_t mtry = params.max_features;
    if (single) {
        mtry = d;
    } else if (mtry == 0) {
        mtry = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));
    }

    std::vector<Tree> trees(params.n_trees);
    parallel_for(params.n_trees, jobs, [&](std::size_t t) {
        Rng rng(derive_seed({seed, 0x54524545ULL, t}));
        std::vector<std::size_t> rows(data.size());
        if (single) {
            std::iota(rows.begin(), rows.end(), 0);
        } else {
            for (auto& r : rows) {
                r = rng.index(data.size());
            }
        }
        trees[t] = train_tree(data, rows, params, mtry, rng);
    });
    return Forest(std::move(trees), params, seed, d);
}

double f1_score(std::span<const int> labels, std::span<const int> predicted)
{
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        tp += labels[i] == 1 && predicted[i] == 1;
        fp += labels[i] != 1 && predicted[i] == 1;
        fn += labels[i] == 1 && predicted[i] != 1;
    }
    if (tp == 0) {
        return 0.0;
    }
    return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double auc_roc(std::span<const int> labels, std::span<const double> scores)
{
    const std::size_t n = labels.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) {
            ++j;
        }
        const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            rank[order[k]] = mid;
        }
        i = j + 1;
    }
    double pos_rank_sum = 0.0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] == 1) {
            pos_rank_sum += rank[i];
            ++pos;
        }
    }
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0) {
        throw Error("AUC needs both classes");
    }
    const double p = static_cast<double>(pos);
    return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

std::vector<std::size_t> stratified_folds(const Dataset& data, std::size_t k, std::uint64_t seed)
{
    Rng rng(derive_seed({seed, 0x464F4C44ULL}));
    std::vector<std::size_t> fold(data.size(), 0);
    std::size_t next = 0;
    for (const int label : {0, 1}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (data.labels[i] == label) {
                members.push_back(i);
            }
        }
        for (std::size_t i = members.size(); i > 1; --i) {
            std::swap(members[i - 1], members[rng.index(i)]);
        }
        for (const auto m : members) {
            fold[m] = next;
            next = (next + 1) % k;
        }
    }
    return fold;
}

CvReport cross_validate(const Dataset& data, const Trainer& trainer, std::size_t k, std::uint64_t seed)
{
    if (k < 2) {
        throw Error("cross-validation needs k >= 2");
    }
    if (data.count(0) < k || data.count(1) < k) {
        throw FoldTooSmall("each class needs at least k=" + std::to_string(k) + " rows (agreement " + std::to_string(data.count(0)) +
                           ", disagreement " + std::to_string(data.count(1)) + ")");
    }
    const auto fold = stratified_folds(data, k, seed);
    CvReport report;
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<std::size_t> train;
        std::vector<std::size_t> test;
        for (std::size_t i = 0; i < data.size(); ++i) {
            (fold[i] == f ? test : train).push_back(i);
        }
        const Scorer scorer = trainer(data.subset(train));
        std::vector<int> labels;
        std::vector<int> predicted;
        std::vector<double> scores;
        for (const auto i : test) {
            const double s = scorer(data.rows[i]);
            labels.push_back(data.labels[i]);
            scores.push_back(s);
            predicted.push_back(s > 0.5 ? 1 : 0);
        }
        FoldScore fs;
        fs.test_rows = test.size();
        fs.test_positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
        fs.f1 = f1_score(labels, predicted);
        fs.auc = auc_roc(labels, scores);
        report.folds.push_back(fs);
        report.mean_f1 += fs.f1 / static_cast<double>(k);
        report.mean_auc += fs.auc / static_cast<double>(k);
    }
    return report;
}

Trainer forest_trainer(ForestParams params, std::uint64_t seed, unsigned jobs)
{
    return [params, seed, jobs](const Dataset& train) -> Scorer {
        auto forest = std::make_shared<Forest>(train_forest(train, params, seed, jobs));
        return [forest](std::span<const double> x) { return forest->predict_proba(x); };
    };
}

} // namespace multisim::surrogate
