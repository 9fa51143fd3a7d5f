#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include <multisim/errors.hpp>
#include <multisim/io.hpp>
#include <multisim/surrogate.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <set>

using namespace multisim;
using namespace multisim::surrogate;

namespace {

// Two features, label 1 above the line x0 + x1 = 1, with a margin.
Dataset separable(std::size_t n, std::uint64_t seed)
{
    Dataset d;
    Rng rng(seed);
    while (d.size() < n) {
        const double a = rng.uniform(0.0, 1.0), b = rng.uniform(0.0, 1.0);
        if (std::abs(a + b - 1.0) < 0.05) {
            continue;
        }
        d.rows.push_back({a, b});
        d.labels.push_back(a + b > 1.0 ? 1 : 0);
    }
    return d;
}

Tree leaf(int vote)
{
    Node n;
    n.vote = vote;
    n.positives = vote ? 3 : 0;
    n.negatives = vote ? 0 : 3;
    return Tree({n});
}

double accuracy(const Forest& f, const Dataset& d)
{
    std::size_t ok = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        ok += (f.predict_proba(d.rows[i]) > 0.5 ? 1 : 0) == d.labels[i];
    }
    return static_cast<double>(ok) / static_cast<double>(d.size());
}

} // namespace

TEST_CASE("separable toy set is learned")
{
    const auto d = separable(200, 1);
    const auto f = train_forest(d, ForestParams{}, 7);
    CHECK(f.trees().size() == 100);
    CHECK(accuracy(f, d) >= 0.99);
    const auto test = separable(500, 2);
    CHECK(accuracy(f, test) >= 0.9);
}

TEST_CASE("single tree on pure data is a constant")
{
    Dataset d;
    for (int i = 0; i < 20; ++i) {
        d.rows.push_back({static_cast<double>(i), static_cast<double>(i % 3)});
        d.labels.push_back(1);
    }
    std::vector<std::size_t> rows(20);
    std::iota(rows.begin(), rows.end(), 0);
    Rng rng(1);
    const auto t = train_tree(d, rows, ForestParams{}, 2, rng);
    REQUIRE(t.nodes().size() == 1);
    CHECK(t.nodes()[0].feature == -1);
    CHECK(t.predict(std::vector<double>{100.0, -5.0}) == 1);
    CHECK(t.predict(std::vector<double>{0.0, 0.0}) == 1);
}

TEST_CASE("degenerate datasets are rejected")
{
    Dataset d;
    d.rows = {{0.0}, {1.0}, {2.0}};
    d.labels = {0, 0, 1};
    CHECK_THROWS_AS(train_forest(d, ForestParams{}, 1), DegenerateDataset);
}

TEST_CASE("training is deterministic under the seed")
{
    const auto d = separable(150, 3);
    const auto probe = separable(100, 4);
    const auto f1 = train_forest(d, ForestParams{}, 11, 1);
    const auto f2 = train_forest(d, ForestParams{}, 11, 4);
    const auto f3 = train_forest(d, ForestParams{}, 12, 1);
    bool differs = false;
    for (const auto& x : probe.rows) {
        CHECK(f1.predict_proba(x) == f2.predict_proba(x));
        differs = differs || f1.predict_proba(x) != f3.predict_proba(x);
    }
    CHECK(io::to_json(f1).dump() == io::to_json(f2).dump());
    CHECK(differs);
}

TEST_CASE("probability is the tree vote fraction")
{
    std::vector<Tree> all_yes(5, leaf(1));
    CHECK(Forest(all_yes, {}, 0, 1).predict_proba(std::vector<double>{0.0}) == 1.0);

    std::vector<Tree> seven;
    for (int i = 0; i < 10; ++i) {
        seven.push_back(leaf(i < 7 ? 1 : 0));
    }
    const Forest f(seven, {}, 0, 1);
    CHECK(f.predict_proba(std::vector<double>{0.0}) == doctest::Approx(0.7));

    const auto d = separable(200, 5);
    const auto forest = train_forest(d, ForestParams{11, 12, 2, 0}, 3);
    for (const auto& x : separable(50, 6).rows) {
        int votes = 0;
        for (const auto& t : forest.trees()) {
            votes += t.predict(x);
        }
        CHECK(forest.predict_proba(x) == doctest::Approx(votes / 11.0));
        CHECK((forest.predict_proba(x) > 0.5) == (votes > 11 / 2));
    }
}

TEST_CASE("genotype prediction uses the flat layout")
{
    Dataset d;
    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> row;
        for (int k = 0; k < 10; ++k) {
            row.push_back(k < 5 ? rng.uniform(-180.0, 180.0) : rng.uniform(10.0, 20.0));
        }
        d.labels.push_back(row[5] > 15.0 ? 1 : 0); // first length decides
        d.rows.push_back(row);
    }
    const auto f = train_forest(d, ForestParams{}, 2);
    const road::RoadGenotype longer{{-90, -90, -90, -90, -90}, {19, 15, 15, 15, 15}};
    const road::RoadGenotype shorter{{-90, -90, -90, -90, -90}, {11, 15, 15, 15, 15}};
    CHECK(f.predict_disagreement(longer) > 0.7);
    CHECK(f.predict_disagreement(shorter) < 0.3);
}

TEST_CASE("AUC and F1")
{
    CHECK(auc_roc(std::vector<int>{1, 1, 0, 0}, std::vector<double>{0.9, 0.8, 0.3, 0.1}) == 1.0);
    CHECK(auc_roc(std::vector<int>{1, 0}, std::vector<double>{0.5, 0.5}) == 0.5);
    CHECK(f1_score(std::vector<int>{1, 1, 0, 0}, std::vector<int>{1, 1, 0, 0}) == 1.0);
    CHECK(f1_score(std::vector<int>{1, 1, 0, 0}, std::vector<int>{0, 0, 0, 0}) == 0.0);

    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 4 + rng.index(60);
        std::vector<int> labels, pred;
        std::vector<double> scores;
        for (std::size_t i = 0; i < n; ++i) {
            labels.push_back(i < 2 ? static_cast<int>(i) : static_cast<int>(rng.index(2)));
            scores.push_back(std::round(rng.uniform(0.0, 1.0) * 10.0) / 10.0); // ties on purpose
            pred.push_back(scores.back() > 0.5 ? 1 : 0);
        }
        CHECK(auc_roc(labels, scores) == doctest::Approx(oracle::auc_pairs(labels, scores)).epsilon(1e-12));
        CHECK(f1_score(labels, pred) == doctest::Approx(oracle::f1_confusion(labels, pred)).epsilon(1e-12));
    }
}

TEST_CASE("stratified folds preserve class ratio")
{
    Rng rng(15);
    for (int trial = 0; trial < 20; ++trial) {
        Dataset d;
        const std::size_t n = 30 + rng.index(300);
        for (std::size_t i = 0; i < n; ++i) {
            d.rows.push_back({static_cast<double>(i)});
            d.labels.push_back(rng.uniform(0.0, 1.0) < 0.3 ? 1 : 0);
        }
        const std::size_t k = 2 + rng.index(6);
        const auto folds = stratified_folds(d, k, 99);
        REQUIRE(folds.size() == n);
        std::vector<std::size_t> pos(k, 0), neg(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            REQUIRE(folds[i] < k);
            (d.labels[i] ? pos : neg)[folds[i]]++;
        }
        const double p = static_cast<double>(d.count(1)) / static_cast<double>(k);
        const double q = static_cast<double>(d.count(0)) / static_cast<double>(k);
        for (std::size_t f = 0; f < k; ++f) {
            CHECK(std::abs(static_cast<double>(pos[f]) - p) <= 1.0);
            CHECK(std::abs(static_cast<double>(neg[f]) - q) <= 1.0);
        }
        CHECK(stratified_folds(d, k, 99) == folds);
    }
}

TEST_CASE("cross-validation")
{
    SUBCASE("perfect predictor")
    {
        const auto d = separable(200, 9);
        const Trainer perfect = [](const Dataset&) { return Scorer([](std::span<const double> x) { return x[0] + x[1] > 1.0 ? 1.0 : 0.0; }); };
        const auto r = cross_validate(d, perfect, 5, 1);
        REQUIRE(r.folds.size() == 5);
        for (const auto& f : r.folds) {
            CHECK(f.f1 == 1.0);
            CHECK(f.auc == 1.0);
        }
        CHECK(r.mean_f1 == 1.0);
    }
    SUBCASE("coin flip")
    {
        Dataset d;
        for (int i = 0; i < 1000; ++i) {
            d.rows.push_back({static_cast<double>(i)});
            d.labels.push_back(i % 2);
        }
        auto rng = std::make_shared<Rng>(42);
        const Trainer coin = [rng](const Dataset&) { return Scorer([rng](std::span<const double>) { return rng->uniform(0.0, 1.0); }); };
        const auto r = cross_validate(d, coin, 5, 3);
        CHECK(std::abs(r.mean_auc - 0.5) <= 0.05);
    }
    SUBCASE("forest on a separable set")
    {
        const auto d = separable(1000, 10);
        const auto r = cross_validate(d, forest_trainer(ForestParams{}, 5, 4), 5, 5);
        CHECK(r.mean_f1 >= 0.9);
        CHECK(r.mean_auc >= 0.95);
    }
    SUBCASE("too few rows for the folds")
    {
        Dataset d;
        d.rows = {{0}, {1}, {2}, {3}, {4}, {5}};
        d.labels = {0, 0, 0, 0, 1, 1};
        CHECK_THROWS_AS(cross_validate(d, forest_trainer({}, 1), 5, 1), FoldTooSmall);
    }
}

TEST_CASE("dataset assembly")
{
    const auto ens = sim::builtin_ensemble();
    search::SearchConfig cfg;
    cfg.backends = {sim::find_backend(ens, "A"), sim::find_backend(ens, "C")};
    cfg.budget = 60;
    cfg.population = 10;
    cfg.seed = 2;
    const auto r1 = search::run_campaign(cfg);
    const auto d1 = build_dataset({r1, r1}, {"x", "y"});
    CHECK(d1.size() + d1.removed_duplicates == 2 * r1.tests.size());
    std::set<std::vector<double>> distinct;
    for (const auto& t : r1.tests) {
        distinct.insert(t.genotype.flat());
    }
    CHECK(d1.size() == distinct.size());
    for (std::size_t i = 0; i < d1.size(); ++i) {
        CHECK(d1.rows[i].size() == 10);
        const auto it = std::find_if(r1.tests.begin(), r1.tests.end(), [&](const auto& t) { return t.genotype.flat() == d1.rows[i]; });
        REQUIRE(it != r1.tests.end());
        CHECK(d1.labels[i] == (it->any_failed() && !it->all_failed() ? 1 : 0));
    }

    auto single = cfg;
    single.backends.pop_back();
    CHECK_THROWS_AS(build_dataset({search::run_campaign(single)}), SingleBackendCampaign);
}

TEST_CASE("forest JSON round trip")
{
    const auto d = separable(120, 12);
    const auto f = train_forest(d, ForestParams{7, 6, 2, 1}, 21);
    const auto back = io::forest_from_json(io::to_json(f));
    CHECK(back.trees().size() == 7);
    CHECK(back.seed() == 21);
    CHECK(back.n_features() == 2);
    for (const auto& x : separable(50, 13).rows) {
        CHECK(back.predict_proba(x) == f.predict_proba(x));
    }
    const auto tree = train_forest(d, ForestParams{1, 6, 2, 0}, 1);
    CHECK(io::to_json(tree).at("kind") == "decision-tree");
    CHECK(io::to_json(f).at("kind") == "random-forest");
}
