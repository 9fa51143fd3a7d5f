#include <multisim/road.hpp>

#include <multisim/errors.hpp>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <utility>

namespace multisim::road {

namespace {

constexpr double deg2rad = M_PI / 180.0;
constexpr double rad2deg = 180.0 / M_PI;
constexpr double angle_tolerance = 1e-9;

// Direction of a clockwise-from-x angle.
Vec2 clockwise_unit(double deg) noexcept
{
    const double r = deg * deg2rad;
    return {std::cos(r), -std::sin(r)};
}

} // namespace

double wrap_degrees(double deg) noexcept
{
    double w = std::fmod(deg + 180.0, 360.0);
    if (w < 0.0) {
        w += 360.0;
    }
    w -= 180.0;
    // fmod can land exactly on +180 through rounding
    return w >= 180.0 ? w - 360.0 : w;
}

std::vector<double> RoadGenotype::flat() const
{
    std::vector<double> out;
    out.reserve(angles.size() + lengths.size());
    out.insert(out.end(), angles.begin(), angles.end());
    out.insert(out.end(), lengths.begin(), lengths.end());
    return out;
}

RoadGenotype RoadGenotype::from_flat(std::span<const double> values)
{
    if (values.size() % 2 != 0) {
        throw Error("genotype vector must have an even number of entries");
    }
    const auto n = values.size() / 2;
    RoadGenotype g;
    g.angles.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(n));
    g.lengths.assign(values.begin() + static_cast<std::ptrdiff_t>(n), values.end());
    return g;
}

bool RoadGenotype::well_formed(const RoadConfig& cfg) const noexcept
{
    if (angles.size() != lengths.size() || angles.empty()) {
        return false;
    }
    const bool angles_ok = std::all_of(angles.begin(), angles.end(), [](double a) { return a >= -180.0 && a < 180.0; });
    const bool lengths_ok = std::all_of(lengths.begin(), lengths.end(),
                                        [&](double l) { return l >= cfg.min_length && l <= cfg.max_length; });
    return angles_ok && lengths_ok;
}

ControlPolyline encode(const RoadGenotype& genotype, Vec2 origin, double heading_deg, double lead_length, double lane_width)
{
    ControlPolyline poly;
    poly.lane_width = lane_width;
    poly.points.reserve(genotype.segments() + 2);
    // heading is counter-clockwise, i.e. the clockwise angle -heading
    poly.points.push_back(origin - lead_length * clockwise_unit(-heading_deg));
    poly.points.push_back(origin);
    for (std::size_t i = 0; i < genotype.segments(); ++i) {
        poly.points.push_back(poly.points.back() + genotype.lengths[i] * clockwise_unit(genotype.angles[i]));
    }
    return poly;
}

ControlPolyline encode(const RoadGenotype& genotype, const RoadConfig& cfg)
{
    return encode(genotype, cfg.origin, cfg.heading_deg, cfg.lead_length, cfg.lane_width);
}

RoadGenotype decode(const ControlPolyline& polyline)
{
    RoadGenotype g;
    const auto& pts = polyline.points;
    for (std::size_t i = 2; i < pts.size(); ++i) {
        const Vec2 d = pts[i] - pts[i - 1];
        g.angles.push_back(wrap_degrees(-std::atan2(d.y, d.x) * rad2deg));
        g.lengths.push_back(norm(d));
    }
    return g;
}

Vec2 catmull_rom(Vec2 p0, Vec2 p1, Vec2 p2, Vec2 p3, double u)
{
    if (u <= 0.0) {
        return p1;
    }
    if (u >= 1.0) {
        return p2;
    }
    constexpr double alpha = 0.5;
    const double t0 = 0.0;
    const double t1 = t0 + std::pow(norm(p1 - p0), alpha);
    const double t2 = t1 + std::pow(norm(p2 - p1), alpha);
    const double t3 = t2 + std::pow(norm(p3 - p2), alpha);
    const double t = t1 + u * (t2 - t1);

    const Vec2 a1 = ((t1 - t) / (t1 - t0)) * p0 + ((t - t0) / (t1 - t0)) * p1;
    const Vec2 a2 = ((t2 - t) / (t2 - t1)) * p1 + ((t - t1) / (t2 - t1)) * p2;
    const Vec2 a3 = ((t3 - t) / (t3 - t2)) * p2 + ((t - t2) / (t3 - t2)) * p3;
    const Vec2 b1 = ((t2 - t) / (t2 - t0)) * a1 + ((t - t0) / (t2 - t0)) * a2;
    const Vec2 b2 = ((t3 - t) / (t3 - t1)) * a2 + ((t - t1) / (t3 - t1)) * a3;
    return ((t2 - t) / (t2 - t1)) * b1 + ((t - t1) / (t2 - t1)) * b2;
}

RoadPath interpolate(const ControlPolyline& polyline, std::size_t samples_per_segment)
{
    const auto& pts = polyline.points;
    if (pts.size() < 2) {
        throw DegenerateSpan("need at least two control points");
    }
    samples_per_segment = std::max<std::size_t>(samples_per_segment, 1);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i] == pts[i - 1]) {
            throw DegenerateSpan("control points " + std::to_string(i - 1) + " and " + std::to_string(i) + " coincide");
        }
    }

    std::vector<Vec2> ext;
    ext.reserve(pts.size() + 2);
    ext.push_back(2.0 * pts[0] - pts[1]);
    ext.insert(ext.end(), pts.begin(), pts.end());
    ext.push_back(2.0 * pts.back() - pts[pts.size() - 2]);

    RoadPath path;
    path.samples.reserve((pts.size() - 1) * samples_per_segment + 1);
    for (std::size_t span = 0; span + 1 < pts.size(); ++span) {
        for (std::size_t j = 0; j < samples_per_segment; ++j) {
            const double u = static_cast<double>(j) / static_cast<double>(samples_per_segment);
            path.samples.push_back(catmull_rom(ext[span], ext[span + 1], ext[span + 2], ext[span + 3], u));
        }
    }
    path.samples.push_back(pts.back());

    path.cumulative.reserve(path.samples.size());
    path.cumulative.push_back(0.0);
    for (std::size_t i = 1; i < path.samples.size(); ++i) {
        path.cumulative.push_back(path.cumulative.back() + norm(path.samples[i] - path.samples[i - 1]));
    }
    return path;
}

double circumradius(Vec2 a, Vec2 b, Vec2 c) noexcept
{
    const double ab = norm(b - a);
    const double bc = norm(c - b);
    const double ca = norm(a - c);
    const double twice_area = std::abs(cross(b - a, c - a));
    // relative collinearity test; exact zero is too strict for rotated inputs
    if (twice_area <= 1e-12 * ab * bc || twice_area == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return ab * bc * ca / (2.0 * twice_area);
}

std::vector<double> heading_changes(std::span<const Vec2> points)
{
    std::vector<double> out;
    if (points.size() < 3) {
        return out;
    }
    out.reserve(points.size() - 2);
    for (std::size_t i = 2; i < points.size(); ++i) {
        const Vec2 d0 = points[i - 1] - points[i - 2];
        const Vec2 d1 = points[i] - points[i - 1];
        out.push_back(std::atan2(cross(d0, d1), dot(d0, d1)) * rad2deg);
    }
    return out;
}

int count_turns(std::span<const double> changes, double min_run_deg)
{
    int turns = 0;
    int run_sign = 0;
    double run_total = 0.0;
    auto close_run = [&] {
        if (run_sign != 0 && run_total > min_run_deg) {
            ++turns;
        }
        run_sign = 0;
        run_total = 0.0;
    };
    for (double d : changes) {
        const int sign = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
        if (sign != run_sign) {
            close_run();
            run_sign = sign;
        }
        run_total += std::abs(d);
    }
    close_run();
    return turns;
}

RoadFeatures features(const ControlPolyline& polyline)
{
    const auto& pts = polyline.points;
    RoadFeatures f;
    for (std::size_t i = 2; i < pts.size(); ++i) {
        const double r = circumradius(pts[i - 2], pts[i - 1], pts[i]);
        if (std::isfinite(r)) {
            f.curvature = std::max(f.curvature, 1.0 / r);
        }
    }
    const auto changes = heading_changes(pts);
    f.turn_count = count_turns(changes);
    return f;
}

namespace {

int orientation(Vec2 a, Vec2 b, Vec2 c) noexcept
{
    const double v = cross(b - a, c - a);
    return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0);
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) noexcept
{
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

} // namespace

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) noexcept
{
    const int o1 = orientation(a, b, c);
    const int o2 = orientation(a, b, d);
    const int o3 = orientation(c, d, a);
    const int o4 = orientation(c, d, b);
    if (o1 != o2 && o3 != o4) {
        return true;
    }
    return (o1 == 0 && on_segment(a, b, c)) || (o2 == 0 && on_segment(a, b, d)) || (o3 == 0 && on_segment(c, d, a)) ||
           (o4 == 0 && on_segment(c, d, b));
}

bool self_intersects(std::span<const Vec2> path)
{
    if (path.size() < 4) {
        return false;
    }
    const std::size_t edges = path.size() - 1;

    Vec2 lo = path[0];
    Vec2 hi = path[0];
    double longest = 0.0;
    for (std::size_t i = 0; i < path.size(); ++i) {
        lo = {std::min(lo.x, path[i].x), std::min(lo.y, path[i].y)};
        hi = {std::max(hi.x, path[i].x), std::max(hi.y, path[i].y)};
        if (i > 0) {
            longest = std::max(longest, norm(path[i] - path[i - 1]));
        }
    }
    const double cell = std::max(longest, 1e-9);

    auto cell_of = [&](double v, double origin) { return static_cast<std::int64_t>(std::floor((v - origin) / cell)); };

    // (cell key, edge) pairs; every edge is registered in each cell its bbox touches
    std::vector<std::pair<std::uint64_t, std::uint32_t>> buckets;
    buckets.reserve(edges * 4);
    for (std::size_t e = 0; e < edges; ++e) {
        const Vec2 a = path[e];
        const Vec2 b = path[e + 1];
        const auto x0 = cell_of(std::min(a.x, b.x), lo.x);
        const auto x1 = cell_of(std::max(a.x, b.x), lo.x);
        const auto y0 = cell_of(std::min(a.y, b.y), lo.y);
        const auto y1 = cell_of(std::max(a.y, b.y), lo.y);
        for (auto cx = x0; cx <= x1; ++cx) {
            for (auto cy = y0; cy <= y1; ++cy) {
                const auto key = (static_cast<std::uint64_t>(cx) << 32) | static_cast<std::uint32_t>(cy);
                buckets.emplace_back(key, static_cast<std::uint32_t>(e));
            }
        }
    }
    std::sort(buckets.begin(), buckets.end());

    for (std::size_t begin = 0; begin < buckets.size();) {
        std::size_t end = begin;
        while (end < buckets.size() && buckets[end].first == buckets[begin].first) {
            ++end;
        }
        for (std::size_t i = begin; i < end; ++i) {
            for (std::size_t j = i + 1; j < end; ++j) {
                const auto e1 = buckets[i].second;
                const auto e2 = buckets[j].second;
                if (e2 <= e1 + 1) {
                    continue;
                }
                if (segments_intersect(path[e1], path[e1 + 1], path[e2], path[e2 + 1])) {
                    return true;
                }
            }
        }
        begin = end;
    }
    return false;
}

std::string to_string(Violation v)
{
    switch (v) {
    case Violation::self_intersection:
        return "self_intersection";
    case Violation::out_of_bounds:
        return "out_of_bounds";
    case Violation::turn_angle:
        return "turn_angle";
    }
    return "unknown";
}

bool ValidityVerdict::has(Violation v) const noexcept
{
    return std::find(violations.begin(), violations.end(), v) != violations.end();
}

ValidityVerdict validate(const ControlPolyline& polyline, const Rect& map_bounds, double max_turn_deg, std::size_t samples_per_segment)
{
    ValidityVerdict verdict;
    const auto path = interpolate(polyline, samples_per_segment);

    if (self_intersects(path.samples)) {
        verdict.violations.push_back(Violation::self_intersection);
    }
    if (!std::all_of(path.samples.begin(), path.samples.end(), [&](Vec2 p) { return map_bounds.contains(p); })) {
        verdict.violations.push_back(Violation::out_of_bounds);
    }
    const auto changes = heading_changes(polyline.points);
    if (std::any_of(changes.begin(), changes.end(), [&](double d) { return std::abs(d) > max_turn_deg + angle_tolerance; })) {
        verdict.violations.push_back(Violation::turn_angle);
    }
    return verdict;
}

ValidityVerdict validate(const RoadGenotype& genotype, const RoadConfig& cfg)
{
    return validate(encode(genotype, cfg), cfg.bounds, cfg.max_turn_deg, cfg.samples_per_segment);
}

RoadGenotype sample_random(Rng& rng, const RoadConfig& cfg)
{
    for (int restart = 0; restart < cfg.restarts; ++restart) {
        RoadGenotype g;
        double previous = wrap_degrees(-cfg.heading_deg);
        bool stuck = false;
        for (std::size_t seg = 0; seg < cfg.segments && !stuck; ++seg) {
            bool placed = false;
            for (int attempt = 0; attempt < cfg.attempts_per_segment; ++attempt) {
                const double angle = wrap_degrees(previous + rng.uniform(-cfg.max_turn_deg, cfg.max_turn_deg));
                const double length = rng.uniform(cfg.min_length, cfg.max_length);
                g.angles.push_back(angle);
                g.lengths.push_back(length);
                if (validate(g, cfg).valid()) {
                    previous = angle;
                    placed = true;
                    break;
                }
                g.angles.pop_back();
                g.lengths.pop_back();
            }
            stuck = !placed;
        }
        if (!stuck) {
            return g;
        }
    }
    throw GenerationExhausted("no valid road after " + std::to_string(cfg.restarts) + " restarts");
}

RoadGenotype with_angle_delta(RoadGenotype genotype, std::size_t segment, double delta_deg)
{
    genotype.angles.at(segment) = wrap_degrees(genotype.angles[segment] + delta_deg);
    return genotype;
}

RoadGenotype mutate(const RoadGenotype& genotype, Rng& rng, double rate, AngleRange extent, const RoadConfig& cfg)
{
    if (rate <= 0.0) {
        return genotype;
    }
    RoadGenotype out = genotype;
    bool changed = false;
    for (std::size_t i = 0; i < out.segments(); ++i) {
        if (rng.bernoulli(rate)) {
            out.angles[i] = wrap_degrees(out.angles[i] + rng.uniform(extent.lo, extent.hi));
            changed = true;
        }
    }
    for (std::size_t i = 0; i < out.segments(); ++i) {
        if (rng.bernoulli(rate)) {
            out.lengths[i] = rng.uniform(cfg.min_length, cfg.max_length);
            changed = true;
        }
    }
    if (changed && !validate(out, cfg).valid()) {
        return sample_random(rng, cfg);
    }
    return out;
}

Offspring one_point_crossover(const RoadGenotype& p1, const RoadGenotype& p2, std::size_t cut)
{
    Offspring o{p1, p2, cut, false, false};
    for (std::size_t i = cut; i < p1.segments(); ++i) {
        std::swap(o.first.angles[i], o.second.angles[i]);
        std::swap(o.first.lengths[i], o.second.lengths[i]);
    }
    return o;
}

Offspring crossover(const RoadGenotype& p1, const RoadGenotype& p2, Rng& rng, const RoadConfig& cfg)
{
    if (p1.segments() != p2.segments()) {
        throw Error("crossover parents differ in segment count");
    }
    const auto n = p1.segments();
    if (n < 2) {
        return {p1, p2, 0, false, false};
    }
    const auto cut = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(n) - 1));
    Offspring o = one_point_crossover(p1, p2, cut);
    if (!validate(o.first, cfg).valid()) {
        o.first = sample_random(rng, cfg);
        o.first_regenerated = true;
    }
    if (!validate(o.second, cfg).valid()) {
        o.second = sample_random(rng, cfg);
        o.second_regenerated = true;
    }
    return o;
}

std::vector<double> normalized(const RoadGenotype& genotype, const RoadConfig& cfg)
{
    std::vector<double> out;
    out.reserve(genotype.segments() * 2);
    for (double a : genotype.angles) {
        out.push_back((a + 180.0) / 360.0);
    }
    const double span = cfg.max_length - cfg.min_length;
    for (double l : genotype.lengths) {
        out.push_back(span > 0.0 ? (l - cfg.min_length) / span : 0.0);
    }
    return out;
}

} // namespace multisim::road
