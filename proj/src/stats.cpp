#include <multisim/stats.hpp>

#include <multisim/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace multisim::stats {

std::string to_string(Magnitude m)
{
    switch (m) {
    case Magnitude::negligible:
        return "negligible";
    case Magnitude::small:
        return "small";
    case Magnitude::medium:
        return "medium";
    case Magnitude::large:
        return "large";
    }
    return "negligible";
}

std::string to_string(Favours f)
{
    switch (f) {
    case Favours::first:
        return "first";
    case Favours::second:
        return "second";
    case Favours::none:
        break;
    }
    return "none";
}

Magnitude classify(double e) noexcept
{
    if (e >= 0.71 || e <= 0.29) {
        return Magnitude::large;
    }
    if (e >= 0.64 || e <= 0.36) {
        return Magnitude::medium;
    }
    if (e >= 0.56 || e <= 0.44) {
        return Magnitude::small;
    }
    return Magnitude::negligible;
}

EffectSize a12(std::span<const double> x, std::span<const double> y)
{
    if (x.empty() || y.empty()) {
        throw EmptySample("A12 needs two non-empty samples");
    }
    double wins = 0.0;
    for (const double xi : x) {
        for (const double yj : y) {
            wins += xi > yj ? 1.0 : (xi == yj ? 0.5 : 0.0);
        }
    }
    EffectSize e;
    e.a12 = wins / (static_cast<double>(x.size()) * static_cast<double>(y.size()));
    e.magnitude = classify(e.a12);
    e.favours = e.a12 > 0.5 ? Favours::first : (e.a12 < 0.5 ? Favours::second : Favours::none);
    return e;
}

double wilcoxon_ranksum(std::span<const double> x, std::span<const double> y)
{
    if (x.size() < 3 || y.size() < 3) {
        throw SampleTooSmall("rank-sum test needs at least 3 values per sample");
    }
    const std::size_t n1 = x.size();
    const std::size_t n2 = y.size();
    const std::size_t n = n1 + n2;
    std::vector<std::pair<double, bool>> all;
    all.reserve(n);
    for (const double v : x) {
        all.emplace_back(v, true);
    }
    for (const double v : y) {
        all.emplace_back(v, false);
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    double w = 0.0;
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && all[j + 1].first == all[i].first) {
            ++j;
        }
        const double t = static_cast<double>(j - i + 1);
        const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            w += all[k].second ? mid : 0.0;
        }
        tie_term += t * t * t - t;
        i = j + 1;
    }

    const double dn1 = static_cast<double>(n1);
    const double dn2 = static_cast<double>(n2);
    const double dn = static_cast<double>(n);
    const double mean = dn1 * (dn + 1.0) / 2.0;
    const double var = dn1 * dn2 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
    if (!(var > 0.0)) {
        return 1.0;
    }
    const double z = std::max(0.0, std::abs(w - mean) - 0.5) / std::sqrt(var);
    return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

double hypervolume_2d(std::span<const Point2> front, Point2 reference)
{
    std::vector<Point2> pts(front.begin(), front.end());
    for (const auto& p : pts) {
        if (!(p.a <= reference.a && p.b <= reference.b)) {
            throw PointBeyondReference("point (" + std::to_string(p.a) + ", " + std::to_string(p.b) + ") exceeds the reference point");
        }
    }
    std::sort(pts.begin(), pts.end(), [](const Point2& p, const Point2& q) { return p.a != q.a ? p.a < q.a : p.b < q.b; });
    double area = 0.0;
    double ceiling = reference.b;
    for (const auto& p : pts) {
        if (p.b < ceiling) {
            area += (reference.a - p.a) * (ceiling - p.b);
            ceiling = p.b;
        }
    }
    return area;
}

Point2 reference_point(std::span<const Point2> points)
{
    auto axis = [&](auto get) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& p : points) {
            const double v = get(p);
            if (std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        if (!std::isfinite(hi)) {
            return 0.1;
        }
        const double range = hi - lo;
        return hi + (range > 0.0 ? 0.1 * range : 0.1);
    };
    return {axis([](const Point2& p) { return p.a; }), axis([](const Point2& p) { return p.b; })};
}

} // namespace multisim::stats
