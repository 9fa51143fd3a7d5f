#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include <multisim/errors.hpp>
#include <multisim/road.hpp>

#include <algorithm>
#include <cmath>

using namespace multisim;
using namespace multisim::road;

namespace {

oracle::P op(Vec2 v)
{
    return {v.x, v.y};
}

RoadGenotype straight(std::size_t n = 5, double length = 20.0)
{
    return {std::vector<double>(n, -90.0), std::vector<double>(n, length)};
}

} // namespace

TEST_CASE("wrap_degrees maps into [-180, 180)")
{
    CHECK(wrap_degrees(180.0) == -180.0);
    CHECK(wrap_degrees(-180.0) == -180.0);
    CHECK(wrap_degrees(190.0) == doctest::Approx(-170.0));
    CHECK(wrap_degrees(-190.0) == doctest::Approx(170.0));
    CHECK(wrap_degrees(720.0 + 45.0) == doctest::Approx(45.0));
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const double w = wrap_degrees(rng.uniform(-2000.0, 2000.0));
        CHECK(w >= -180.0);
        CHECK(w < 180.0);
    }
}

TEST_CASE("encode builds n+2 control points")
{
    const RoadGenotype g{{-90, -110, 173, -120, -140}, {10, 20, 18, 17, 15}};
    const auto poly = encode(g, RoadConfig{});
    CHECK(poly.points.size() == 7);
    CHECK(g.segments() == 5);
    CHECK(g.flat().size() == 10);
}

TEST_CASE("axis-aligned single segment lands on the x axis")
{
    const RoadGenotype g{{0.0}, {10.0}};
    const auto poly = encode(g, {0.0, 0.0}, 90.0, 10.0);
    REQUIRE(poly.points.size() == 3);
    CHECK(poly.points[1].x == 0.0);
    CHECK(poly.points[1].y == 0.0);
    CHECK(poly.points[2].x == doctest::Approx(10.0));
    CHECK(std::abs(poly.points[2].y) < 1e-12);
    // heading 90 puts the lead-in point south of the origin
    CHECK(poly.points[0].y == doctest::Approx(-10.0));
}

TEST_CASE("clockwise angles turn right of the x axis")
{
    const auto poly = encode(RoadGenotype{{90.0}, {10.0}}, {0.0, 0.0}, 90.0, 10.0);
    CHECK(poly.points[2].y == doctest::Approx(-10.0));
    CHECK(std::abs(poly.points[2].x) < 1e-9);
}

TEST_CASE("decode inverts encode on random genotypes")
{
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        RoadGenotype g;
        for (int k = 0; k < 5; ++k) {
            g.angles.push_back(rng.uniform(-180.0, 180.0));
            g.lengths.push_back(rng.uniform(10.0, 20.0));
        }
        const auto back = decode(encode(g, RoadConfig{}));
        REQUIRE(back.segments() == 5);
        for (int k = 0; k < 5; ++k) {
            double d = std::abs(back.angles[k] - g.angles[k]);
            d = std::min(d, 360.0 - d);
            CHECK(d < 1e-9);
            CHECK(back.lengths[k] == doctest::Approx(g.lengths[k]).epsilon(1e-12));
        }
    }
}

TEST_CASE("flat and from_flat round trip")
{
    const RoadGenotype g{{1, 2, 3}, {10, 11, 12}};
    const auto f = g.flat();
    CHECK(f == std::vector<double>{1, 2, 3, 10, 11, 12});
    CHECK(RoadGenotype::from_flat(f) == g);
    CHECK_THROWS_AS(RoadGenotype::from_flat(std::vector<double>{1, 2, 3}), Error);
}

TEST_CASE("well_formed enforces ranges")
{
    RoadConfig cfg;
    CHECK(straight().well_formed(cfg));
    CHECK_FALSE(RoadGenotype{{180.0}, {10.0}}.well_formed(cfg));
    CHECK_FALSE(RoadGenotype{{0.0}, {9.99}}.well_formed(cfg));
    CHECK_FALSE(RoadGenotype{{0.0, 1.0}, {10.0}}.well_formed(cfg));
}

TEST_CASE("catmull-rom returns span endpoints exactly")
{
    const Vec2 p0{0, 0}, p1{3, 1}, p2{7, 4}, p3{9, 9};
    CHECK(catmull_rom(p0, p1, p2, p3, 0.0) == p1);
    CHECK(catmull_rom(p0, p1, p2, p3, 1.0) == p2);
    const auto mid = catmull_rom(p0, p1, p2, p3, 0.5);
    CHECK(mid.x > 3.0);
    CHECK(mid.x < 7.0);
}

TEST_CASE("interpolation passes through every control point")
{
    Rng rng(5);
    RoadConfig cfg;
    for (int i = 0; i < 50; ++i) {
        const auto poly = encode(sample_random(rng, cfg), cfg);
        const auto path = interpolate(poly, 25);
        CHECK(path.samples.size() == (poly.points.size() - 1) * 25 + 1);
        for (std::size_t k = 0; k < poly.points.size(); ++k) {
            CHECK(path.samples[k * 25] == poly.points[k]);
        }
        CHECK(path.arc_length() > 0.0);
        CHECK(std::is_sorted(path.cumulative.begin(), path.cumulative.end()));
    }
}

TEST_CASE("collinear control points give a straight path")
{
    ControlPolyline poly{{{0, 0}, {3, 4}, {6, 8}, {12, 16}}, 4.4};
    const auto path = interpolate(poly, 25);
    for (const auto& s : path.samples) {
        CHECK(std::abs(4.0 * s.x - 3.0 * s.y) / 5.0 < 1e-9);
    }
}

TEST_CASE("interpolated circle keeps its radius")
{
    const double r = 50.0;
    ControlPolyline poly;
    for (int k = 0; k <= 8; ++k) {
        const double a = k * M_PI / 12.0;
        poly.points.push_back({r * std::cos(a), r * std::sin(a)});
    }
    const auto path = interpolate(poly, 25);
    // interior spans only; the phantom end points bend the outer spans
    for (std::size_t i = 25; i + 25 < path.samples.size(); ++i) {
        const double d = norm(path.samples[i]);
        CHECK(std::abs(d - r) / r < 0.02);
    }
    for (std::size_t i = 37; i + 37 < path.samples.size(); i += 7) {
        const double rr = oracle::circumradius(op(path.samples[i - 12]), op(path.samples[i]), op(path.samples[i + 12]));
        CHECK(std::abs(rr - r) / r < 0.02);
    }
}

TEST_CASE("coincident control points are rejected")
{
    ControlPolyline poly{{{0, 0}, {1, 1}, {1, 1}, {2, 3}}, 4.4};
    CHECK_THROWS_AS(interpolate(poly, 25), DegenerateSpan);
}

TEST_CASE("circumradius matches analytic circles")
{
    Rng rng(17);
    for (int i = 0; i < 500; ++i) {
        const double r = rng.uniform(1.0, 500.0);
        const Vec2 c{rng.uniform(-100, 100), rng.uniform(-100, 100)};
        std::vector<double> th{rng.uniform(0, 2 * M_PI), rng.uniform(0, 2 * M_PI), rng.uniform(0, 2 * M_PI)};
        std::sort(th.begin(), th.end());
        if (th[1] - th[0] < 0.05 || th[2] - th[1] < 0.05 || 2 * M_PI - (th[2] - th[0]) < 0.05) {
            continue;
        }
        const Vec2 a = c + r * Vec2{std::cos(th[0]), std::sin(th[0])};
        const Vec2 b = c + r * Vec2{std::cos(th[1]), std::sin(th[1])};
        const Vec2 d = c + r * Vec2{std::cos(th[2]), std::sin(th[2])};
        CHECK(std::abs(1.0 / circumradius(a, b, d) - 1.0 / r) * r < 1e-6);
        CHECK(circumradius(a, b, d) == doctest::Approx(oracle::circumradius(op(a), op(b), op(d))).epsilon(1e-6));
    }
}

TEST_CASE("equilateral triangle curvature")
{
    for (double s : {1.0, 7.5, 20.0}) {
        const Vec2 a{0, 0}, b{s, 0}, c{s / 2, s * std::sqrt(3.0) / 2};
        ControlPolyline poly{{a, b, c}, 4.4};
        CHECK(features(poly).curvature == doctest::Approx(std::sqrt(3.0) / s).epsilon(1e-12));
    }
}

TEST_CASE("straight road has zero curvature and no turns")
{
    const auto f = features(encode(straight(), RoadConfig{}));
    CHECK(f.curvature == 0.0);
    CHECK(f.turn_count == 0);
}

TEST_CASE("curvature is invariant under rigid motion")
{
    Rng rng(23);
    RoadConfig cfg;
    for (int i = 0; i < 50; ++i) {
        const auto poly = encode(sample_random(rng, cfg), cfg);
        const double th = rng.uniform(-M_PI, M_PI);
        const Vec2 t{rng.uniform(-50, 50), rng.uniform(-50, 50)};
        ControlPolyline moved = poly;
        for (auto& p : moved.points) {
            p = Vec2{std::cos(th) * p.x - std::sin(th) * p.y, std::sin(th) * p.x + std::cos(th) * p.y} + t;
        }
        const double c0 = features(poly).curvature;
        const double c1 = features(moved).curvature;
        CHECK(std::abs(c0 - c1) <= 1e-9 * std::max(c0, 1e-12));
        CHECK(features(poly).turn_count == features(moved).turn_count);
    }
}

TEST_CASE("turn counting uses same-sign runs above 5 degrees")
{
    CHECK(count_turns(std::vector<double>{}) == 0);
    CHECK(count_turns(std::vector<double>{10.0}) == 1);
    CHECK(count_turns(std::vector<double>{3.0, 3.0}) == 1);  // run total 6
    CHECK(count_turns(std::vector<double>{2.0, 2.0}) == 0);  // run total 4
    CHECK(count_turns(std::vector<double>{5.0}) == 0);       // not above 5
    CHECK(count_turns(std::vector<double>{20.0, -20.0, 20.0}) == 3);
    CHECK(count_turns(std::vector<double>{20.0, 0.0, 20.0}) == 2);
    CHECK(count_turns(std::vector<double>{30.0, 30.0, -4.0, 30.0}) == 2);
}

TEST_CASE("three-turn road")
{
    // left, right, left
    const RoadGenotype g{{-90.0, -120.0, -120.0, -60.0, -90.0}, {15.0, 15.0, 15.0, 15.0, 15.0}};
    const auto f = features(encode(g, RoadConfig{}));
    CHECK(f.turn_count == 3);
    CHECK(f.curvature > 0.0);
}

TEST_CASE("segment intersection predicate")
{
    CHECK(segments_intersect({0, 0}, {2, 2}, {0, 2}, {2, 0}));
    CHECK_FALSE(segments_intersect({0, 0}, {1, 0}, {0, 1}, {1, 1}));
    CHECK(segments_intersect({0, 0}, {2, 0}, {1, 0}, {3, 0}));  // collinear overlap
    CHECK(segments_intersect({0, 0}, {1, 0}, {1, 0}, {1, 5}));  // touching endpoint
    CHECK_FALSE(segments_intersect({0, 0}, {1, 0}, {2, 0}, {3, 0}));
}

TEST_CASE("self-intersection detector agrees with the quadratic oracle")
{
    Rng rng(29);
    int crossing = 0;
    for (int i = 0; i < 500; ++i) {
        const int k = 4 + static_cast<int>(rng.index(40));
        std::vector<Vec2> pts;
        std::vector<oracle::P> ops;
        Vec2 p{0, 0};
        double heading = rng.uniform(-M_PI, M_PI);
        for (int j = 0; j < k; ++j) {
            pts.push_back(p);
            ops.push_back(op(p));
            heading += rng.uniform(-2.0, 2.0);
            p = p + rng.uniform(0.5, 10.0) * Vec2{std::cos(heading), std::sin(heading)};
        }
        const bool expected = oracle::polyline_self_intersects(ops);
        crossing += expected ? 1 : 0;
        CHECK(self_intersects(pts) == expected);
    }
    CHECK(crossing > 50);
    CHECK(crossing < 450);
}

TEST_CASE("validity checks")
{
    RoadConfig cfg;
    SUBCASE("straight 100 m road is valid")
    {
        CHECK(validate(straight(5, 18.0), cfg).valid());
    }
    SUBCASE("figure eight self-intersects")
    {
        ControlPolyline eight{{{0, -10}, {0, 0}, {20, 20}, {20, 0}, {0, 20}, {0, 35}}, 4.4};
        const auto v = validate(eight, cfg.bounds, 180.0);
        CHECK(v.has(Violation::self_intersection));
        std::vector<oracle::P> sampled;
        for (const auto& s : interpolate(eight, 25).samples) {
            sampled.push_back(op(s));
        }
        CHECK(oracle::polyline_self_intersects(sampled));
    }
    SUBCASE("sharp turn violates the angle limit")
    {
        const RoadGenotype g{{-90.0, 30.0}, {15.0, 15.0}}; // north then 120 degrees right
        const auto v = validate(g, cfg);
        CHECK(v.has(Violation::turn_angle));
        CHECK_FALSE(v.valid());
    }
    SUBCASE("ninety degrees is allowed")
    {
        CHECK_FALSE(validate(RoadGenotype{{-90.0, 0.0}, {15.0, 15.0}}, cfg).has(Violation::turn_angle));
    }
    SUBCASE("leaving the map")
    {
        RoadConfig small = cfg;
        small.bounds = {{-30, -30}, {30, 30}};
        const auto v = validate(straight(5, 20.0), small);
        CHECK(v.has(Violation::out_of_bounds));
    }
}

TEST_CASE("random roads are valid and reproducible")
{
    RoadConfig cfg;
    Rng rng(1234);
    for (int i = 0; i < 1000; ++i) {
        const auto g = sample_random(rng, cfg);
        REQUIRE(g.segments() == 5);
        CHECK(validate(g, cfg).valid());
        for (double l : g.lengths) {
            CHECK(l >= 10.0);
            CHECK(l <= 20.0);
        }
        CHECK(g.well_formed(cfg));
    }
    Rng a(99), b(99);
    CHECK(sample_random(a, cfg) == sample_random(b, cfg));
}

TEST_CASE("impossible constraints exhaust generation")
{
    RoadConfig cfg;
    cfg.bounds = {{-5, -15}, {5, 5}};
    cfg.restarts = 2;
    cfg.attempts_per_segment = 5;
    Rng rng(1);
    CHECK_THROWS_AS(sample_random(rng, cfg), GenerationExhausted);
}

TEST_CASE("mutation")
{
    RoadConfig cfg;
    Rng rng(77);
    const auto base = sample_random(rng, cfg);

    SUBCASE("rate 0 is the identity")
    {
        for (int i = 0; i < 100; ++i) {
            CHECK(mutate(base, rng, 0.0, {}, cfg) == base);
        }
    }
    SUBCASE("angle delta on the last segment")
    {
        RoadGenotype g = base;
        g.angles.back() = 90.0;
        CHECK(with_angle_delta(g, 4, 10.0).angles.back() == doctest::Approx(100.0));
        CHECK(with_angle_delta(g, 4, 95.0).angles.back() == doctest::Approx(-175.0));
    }
    SUBCASE("mutants are always valid")
    {
        auto g = base;
        for (int i = 0; i < 1000; ++i) {
            g = mutate(g, rng, 0.3, {}, cfg);
            CHECK(validate(g, cfg).valid());
        }
    }
    SUBCASE("rate 1 changes every gene within range")
    {
        int changed_lengths = 0;
        for (int i = 0; i < 100; ++i) {
            const auto m = mutate(base, rng, 1.0, {-8.0, 8.0}, cfg);
            CHECK(m.well_formed(cfg));
            changed_lengths += m.lengths != base.lengths;
        }
        CHECK(changed_lengths == 100);
    }
}

TEST_CASE("one-point crossover")
{
    RoadConfig cfg;
    const RoadGenotype p1{{1, 2, 3, 4, 5}, {11, 12, 13, 14, 15}};
    const RoadGenotype p2{{-1, -2, -3, -4, -5}, {16, 17, 18, 19, 20}};
    const auto o = one_point_crossover(p1, p2, 3);
    CHECK(o.first.angles == std::vector<double>{1, 2, 3, -4, -5});
    CHECK(o.first.lengths == std::vector<double>{11, 12, 13, 19, 20});
    CHECK(o.second.angles == std::vector<double>{-1, -2, -3, 4, 5});
    CHECK(o.second.lengths == std::vector<double>{16, 17, 18, 14, 15});

    Rng rng(8);
    const auto a = sample_random(rng, cfg);
    const auto same = crossover(a, a, rng, cfg);
    CHECK(same.first == a);
    CHECK(same.second == a);

    int conserved = 0;
    for (int i = 0; i < 300; ++i) {
        const auto x = sample_random(rng, cfg);
        const auto y = sample_random(rng, cfg);
        const auto c = crossover(x, y, rng, cfg);
        CHECK(c.cut >= 1);
        CHECK(c.cut <= 4);
        CHECK(validate(c.first, cfg).valid());
        CHECK(validate(c.second, cfg).valid());
        if (!c.first_regenerated && !c.second_regenerated) {
            auto parents = x.flat();
            const auto yf = y.flat();
            parents.insert(parents.end(), yf.begin(), yf.end());
            auto kids = c.first.flat();
            const auto sf = c.second.flat();
            kids.insert(kids.end(), sf.begin(), sf.end());
            std::sort(parents.begin(), parents.end());
            std::sort(kids.begin(), kids.end());
            CHECK(parents == kids);
            ++conserved;
        }
    }
    CHECK(conserved > 0);
}

TEST_CASE("normalisation maps genes into [0, 1]")
{
    RoadConfig cfg;
    const RoadGenotype lo{std::vector<double>(5, -180.0), std::vector<double>(5, 10.0)};
    const RoadGenotype hi{std::vector<double>(5, std::nextafter(180.0, 0.0)), std::vector<double>(5, 20.0)};
    for (double v : normalized(lo, cfg)) {
        CHECK(v == 0.0);
    }
    for (double v : normalized(hi, cfg)) {
        CHECK(v == doctest::Approx(1.0));
    }
}
