#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include <multisim/errors.hpp>
#include <multisim/rng.hpp>
#include <multisim/stats.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace multisim;
using namespace multisim::stats;

namespace {

std::vector<std::pair<double, double>> as_pairs(const std::vector<Point2>& pts)
{
    std::vector<std::pair<double, double>> out;
    for (const auto& p : pts) {
        out.emplace_back(p.a, p.b);
    }
    return out;
}

} // namespace

TEST_CASE("A12 examples")
{
    const std::vector<double> x{1, 2}, y{1, 3};
    const auto e = a12(x, y);
    CHECK(e.a12 == 0.375);
    CHECK(e.magnitude == Magnitude::small);
    CHECK(e.favours == Favours::second);

    const std::vector<double> same{4, 5, 6};
    const auto s = a12(same, same);
    CHECK(s.a12 == 0.5);
    CHECK(s.magnitude == Magnitude::negligible);
    CHECK(s.favours == Favours::none);

    const std::vector<double> hi{10, 11, 12}, lo{1, 2, 3};
    const auto big = a12(hi, lo);
    CHECK(big.a12 == 1.0);
    CHECK(big.magnitude == Magnitude::large);
    CHECK(big.favours == Favours::first);

    CHECK_THROWS_AS(a12(std::vector<double>{}, lo), EmptySample);
    CHECK_THROWS_AS(a12(lo, std::vector<double>{}), EmptySample);
}

TEST_CASE("A12 magnitude boundaries")
{
    CHECK(classify(0.5) == Magnitude::negligible);
    CHECK(classify(0.559) == Magnitude::negligible);
    CHECK(classify(0.56) == Magnitude::small);
    CHECK(classify(0.639) == Magnitude::small);
    CHECK(classify(0.64) == Magnitude::medium);
    CHECK(classify(0.709) == Magnitude::medium);
    CHECK(classify(0.71) == Magnitude::large);
    CHECK(classify(0.441) == Magnitude::negligible);
    CHECK(classify(0.44) == Magnitude::small);
    CHECK(classify(0.361) == Magnitude::small);
    CHECK(classify(0.36) == Magnitude::medium);
    CHECK(classify(0.291) == Magnitude::medium);
    CHECK(classify(0.29) == Magnitude::large);
    CHECK(classify(0.0) == Magnitude::large);
}

TEST_CASE("A12 antisymmetry and brute force")
{
    Rng rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> x, y;
        const auto nx = 1 + rng.index(12), ny = 1 + rng.index(12);
        for (std::size_t i = 0; i < nx; ++i) {
            x.push_back(static_cast<double>(rng.index(5)));
        }
        for (std::size_t i = 0; i < ny; ++i) {
            y.push_back(static_cast<double>(rng.index(5)));
        }
        const double xy = a12(x, y).a12, yx = a12(y, x).a12;
        CHECK(xy + yx == doctest::Approx(1.0).epsilon(1e-12));
        double wins = 0.0;
        for (double a : x) {
            for (double b : y) {
                wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
            }
        }
        CHECK(xy == doctest::Approx(wins / static_cast<double>(nx * ny)).epsilon(1e-12));
    }
}

TEST_CASE("Wilcoxon rank sum")
{
    const std::vector<double> a{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(wilcoxon_ranksum(a, a) >= 0.9);

    const std::vector<double> b{11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
    const double p = wilcoxon_ranksum(a, b);
    CHECK(p < 0.01);
    CHECK(std::abs(p - oracle::exact_ranksum_p(10, 10, 55)) < 0.01);
    CHECK(wilcoxon_ranksum(b, a) == p);

    const std::vector<double> c{3, 3, 3}, d{3, 3, 3};
    CHECK(wilcoxon_ranksum(c, d) == 1.0);

    CHECK_THROWS_AS(wilcoxon_ranksum(std::vector<double>{1, 2}, a), SampleTooSmall);
    CHECK_THROWS_AS(wilcoxon_ranksum(a, std::vector<double>{1, 2}), SampleTooSmall);
}

TEST_CASE("Wilcoxon approximation near the exact test at n = 10")
{
    // every attainable rank sum of a tie-free 10 vs 10 design
    for (int w = 55; w <= 155; ++w) {
        // build ranks for group X summing to w: start from 1..10 and shift the top ranks
        std::vector<int> ranks{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
        int excess = w - 55;
        for (int k = 9; k >= 0 && excess > 0; --k) {
            const int room = (20 - (9 - k)) - ranks[k];
            const int step = std::min(room, excess);
            ranks[k] += step;
            excess -= step;
        }
        std::vector<double> x, y;
        for (int r = 1; r <= 20; ++r) {
            (std::find(ranks.begin(), ranks.end(), r) != ranks.end() ? x : y).push_back(r);
        }
        REQUIRE(x.size() == 10);
        CHECK(std::abs(wilcoxon_ranksum(x, y) - oracle::exact_ranksum_p(10, 10, w)) < 0.01);
    }
}

TEST_CASE("Wilcoxon p is symmetric and bounded")
{
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> x, y;
        for (std::size_t i = 0; i < 3 + rng.index(8); ++i) {
            x.push_back(std::round(rng.uniform(0, 10)));
        }
        for (std::size_t i = 0; i < 3 + rng.index(8); ++i) {
            y.push_back(std::round(rng.uniform(0, 10)));
        }
        const double p = wilcoxon_ranksum(x, y);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        CHECK(p == doctest::Approx(wilcoxon_ranksum(y, x)).epsilon(1e-12));
    }
}

TEST_CASE("hypervolume examples")
{
    CHECK(hypervolume_2d(std::vector<Point2>{{0, 0}}, {1, 1}) == 1.0);
    CHECK(hypervolume_2d(std::vector<Point2>{{0, 0.5}, {0.5, 0}}, {1, 1}) == doctest::Approx(0.75));
    CHECK(hypervolume_2d(std::vector<Point2>{{0, 0.5}, {0.5, 0}, {0.6, 0.6}}, {1, 1}) == doctest::Approx(0.75));
    CHECK(hypervolume_2d(std::vector<Point2>{}, {1, 1}) == 0.0);
    CHECK(hypervolume_2d(std::vector<Point2>{{1, 0}}, {1, 1}) == 0.0);
    CHECK_THROWS_AS(hypervolume_2d(std::vector<Point2>{{1.5, 0}}, {1, 1}), PointBeyondReference);
}

TEST_CASE("hypervolume against the union-of-rectangles oracle")
{
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Point2> pts;
        const auto n = 1 + rng.index(15);
        for (std::size_t i = 0; i < n; ++i) {
            pts.push_back({std::round(rng.uniform(0, 10)) / 10.0, std::round(rng.uniform(0, 10)) / 10.0});
        }
        const Point2 ref{1.0, 1.0};
        const double hv = hypervolume_2d(pts, ref);
        CHECK(hv == doctest::Approx(oracle::dominated_area(as_pairs(pts), ref.a, ref.b)).epsilon(1e-12));

        auto shuffled = pts;
        std::reverse(shuffled.begin(), shuffled.end());
        std::rotate(shuffled.begin(), shuffled.begin() + static_cast<long>(rng.index(shuffled.size())), shuffled.end());
        CHECK(hypervolume_2d(shuffled, ref) == doctest::Approx(hv).epsilon(1e-12));

        auto more = pts;
        more.push_back({rng.uniform(0, 1), rng.uniform(0, 1)});
        CHECK(hypervolume_2d(more, ref) >= hv - 1e-12);
    }
}

TEST_CASE("reference point")
{
    const std::vector<Point2> pts{{-3, 0}, {-1, -2}, {-2, -1}};
    const auto r = reference_point(pts);
    CHECK(r.a == doctest::Approx(-1.0 + 0.2));
    CHECK(r.b == doctest::Approx(0.0 + 0.2));

    const std::vector<Point2> flat{{-2, -1}, {-2, -1}};
    const auto f = reference_point(flat);
    CHECK(f.a == doctest::Approx(-1.9));
    CHECK(f.b == doctest::Approx(-0.9));

    const double inf = std::numeric_limits<double>::infinity();
    const std::vector<Point2> with_inf{{-3, -inf}, {-1, -2}, {-2, -1}};
    const auto g = reference_point(with_inf);
    CHECK(g.b == doctest::Approx(-1.0 + 0.1));
}
