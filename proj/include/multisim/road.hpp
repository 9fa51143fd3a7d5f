#pragma once
/**
 * @file   road.hpp
 * @brief  Road genotypes, their control polylines, spline interpolation,
 *         static road features, validity checks and genetic operators.
 *
 * Angles in a genotype are clockwise from the +x axis, in degrees, in
 * [-180, 180). World coordinates are metres with +y pointing north, so a
 * genotype angle of -90 drives north.
 */

#include <multisim/rng.hpp>

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace multisim::road {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) noexcept { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2 a, Vec2 b) noexcept = default;
};

inline double dot(Vec2 a, Vec2 b) noexcept { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) noexcept { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) noexcept { return std::hypot(a.x, a.y); }

struct Rect {
    Vec2 min;
    Vec2 max;

    /// Closed on all sides.
    bool contains(Vec2 p) const noexcept { return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y; }
};

/// Wraps an angle in degrees into [-180, 180).
double wrap_degrees(double deg) noexcept;

/// Road generation and validity constraints shared by every operator.
struct RoadConfig {
    std::size_t segments = 5;
    double min_length = 10.0;
    double max_length = 20.0;
    double max_turn_deg = 90.0;
    Rect bounds{{-100.0, -100.0}, {100.0, 100.0}};
    Vec2 origin{0.0, 0.0};
    double heading_deg = 90.0; ///< counter-clockwise from +x; 90 is north
    double lead_length = 10.0; ///< lead-in distance before the origin
    double lane_width = 4.4;
    std::size_t samples_per_segment = 25;
    int attempts_per_segment = 50;
    int restarts = 20;
};

struct RoadGenotype {
    std::vector<double> angles;  ///< clockwise from +x, degrees
    std::vector<double> lengths; ///< metres

    std::size_t segments() const noexcept { return angles.size(); }

    /// [a_1..a_n, l_1..l_n]
    std::vector<double> flat() const;
    static RoadGenotype from_flat(std::span<const double> values);

    /// Shape and range invariants (lengths checked against the config range).
    bool well_formed(const RoadConfig& cfg) const noexcept;

    friend bool operator==(const RoadGenotype&, const RoadGenotype&) = default;
};

struct ControlPolyline {
    std::vector<Vec2> points;
    double lane_width = 4.4;
};

struct RoadPath {
    std::vector<Vec2> samples;
    std::vector<double> cumulative; ///< arc length at each sample, starts at 0

    double arc_length() const noexcept { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

struct RoadFeatures {
    double curvature = 0.0; ///< 1/m
    int turn_count = 0;
};

/// Builds n+2 control points: a lead-in point behind the origin along the heading,
/// the origin, then one point per segment.
ControlPolyline encode(const RoadGenotype& genotype, Vec2 origin, double heading_deg, double lead_length, double lane_width = 4.4);
ControlPolyline encode(const RoadGenotype& genotype, const RoadConfig& cfg);

/// Inverse of encode for the segment part (the lead segment is dropped).
RoadGenotype decode(const ControlPolyline& polyline);

/// One point of the centripetal Catmull-Rom span p1->p2 at u in [0, 1].
Vec2 catmull_rom(Vec2 p0, Vec2 p1, Vec2 p2, Vec2 p3, double u);

/// Centripetal Catmull-Rom through every control point, endpoints extended
/// by mirrored phantom points. Throws DegenerateSpan on repeated points.
RoadPath interpolate(const ControlPolyline& polyline, std::size_t samples_per_segment);

/// Circumradius of a triangle; +inf for collinear points.
double circumradius(Vec2 a, Vec2 b, Vec2 c) noexcept;

/// Heading changes (degrees, counter-clockwise positive) between consecutive polyline edges.
std::vector<double> heading_changes(std::span<const Vec2> points);

/// Maximal same-sign runs of heading change whose accumulated magnitude exceeds min_run_deg.
int count_turns(std::span<const double> heading_changes_deg, double min_run_deg = 5.0);

RoadFeatures features(const ControlPolyline& polyline);

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) noexcept;

/// True if any two non-adjacent edges of the open polyline intersect.
/// Uses a uniform grid so only nearby edge pairs are tested.
bool self_intersects(std::span<const Vec2> path);

enum class Violation { self_intersection, out_of_bounds, turn_angle };

std::string to_string(Violation v);

struct ValidityVerdict {
    std::vector<Violation> violations;

    bool valid() const noexcept { return violations.empty(); }
    bool has(Violation v) const noexcept;
};

ValidityVerdict validate(const ControlPolyline& polyline, const Rect& map_bounds, double max_turn_deg,
                         std::size_t samples_per_segment = 25);
ValidityVerdict validate(const RoadGenotype& genotype, const RoadConfig& cfg);

/// Grows a road one segment at a time, retrying each segment until the
/// partial road is valid. Throws GenerationExhausted.
RoadGenotype sample_random(Rng& rng, const RoadConfig& cfg);

struct AngleRange {
    double lo = -8.0;
    double hi = 8.0;
};

/// Adds delta to one segment angle (wrapped); no validity check.
RoadGenotype with_angle_delta(RoadGenotype genotype, std::size_t segment, double delta_deg);

/// Per-gene mutation; invalid mutants are replaced by sample_random.
RoadGenotype mutate(const RoadGenotype& genotype, Rng& rng, double rate, AngleRange extent, const RoadConfig& cfg);

struct Offspring {
    RoadGenotype first;
    RoadGenotype second;
    std::size_t cut = 0;
    bool first_regenerated = false;
    bool second_regenerated = false;
};

/// One-point crossover at a cut in [1, n-1], exchanging both angle and length tails.
Offspring one_point_crossover(const RoadGenotype& p1, const RoadGenotype& p2, std::size_t cut);
Offspring crossover(const RoadGenotype& p1, const RoadGenotype& p2, Rng& rng, const RoadConfig& cfg);

/// Min-max normalised genotype: angles by [-180, 180), lengths by [min_length, max_length].
std::vector<double> normalized(const RoadGenotype& genotype, const RoadConfig& cfg);

} // namespace multisim::road
