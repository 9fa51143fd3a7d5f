#pragma once

#include <span>
#include <string>
#include <vector>

namespace multisim::stats {

enum class Magnitude { negligible, small, medium, large };
enum class Favours { none, first, second }; ///< which sample tends to be larger

std::string to_string(Magnitude m);
std::string to_string(Favours f);

struct EffectSize {
    double a12 = 0.5;
    Magnitude magnitude = Magnitude::negligible;
    Favours favours = Favours::none;
};

/// Magnitude class of an A12 value.
Magnitude classify(double a12) noexcept;

/// P(X > Y) + 0.5 P(X == Y). Throws EmptySample.
EffectSize a12(std::span<const double> x, std::span<const double> y);

/// Two-sided rank-sum p-value, normal approximation with tie and continuity
/// correction. Throws SampleTooSmall when either sample has fewer than 3 values.
double wilcoxon_ranksum(std::span<const double> x, std::span<const double> y);

struct Point2 {
    double a = 0.0;
    double b = 0.0;
};

/// Area dominated by the points (minimisation) and bounded by the reference.
/// Throws PointBeyondReference when a point exceeds the reference in either coordinate.
double hypervolume_2d(std::span<const Point2> front, Point2 reference);

/// Worst value per coordinate plus 10% of the observed range (0.1 when the range is zero).
/// Non-finite coordinates are ignored.
Point2 reference_point(std::span<const Point2> points);

} // namespace multisim::stats
