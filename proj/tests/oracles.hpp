#pragma once
// Independent reference implementations used as test oracles. They favour
// obviousness over speed and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

struct P {
    double x;
    double y;
};

// Circumradius from Heron's formula.
inline double circumradius(P a, P b, P c)
{
    const double la = std::hypot(b.x - c.x, b.y - c.y);
    const double lb = std::hypot(a.x - c.x, a.y - c.y);
    const double lc = std::hypot(a.x - b.x, a.y - b.y);
    const double s = (la + lb + lc) / 2.0;
    const double area2 = s * (s - la) * (s - lb) * (s - lc);
    if (area2 <= 0.0) {
        return INFINITY;
    }
    return la * lb * lc / (4.0 * std::sqrt(area2));
}

// Parametric segment intersection, closed segments.
inline bool segments_cross(P a, P b, P c, P d)
{
    const double rx = b.x - a.x, ry = b.y - a.y;
    const double sx = d.x - c.x, sy = d.y - c.y;
    const double denom = rx * sy - ry * sx;
    const double qpx = c.x - a.x, qpy = c.y - a.y;
    if (denom == 0.0) {
        if (qpx * ry - qpy * rx != 0.0) {
            return false; // parallel, not collinear
        }
        const double rr = rx * rx + ry * ry;
        const double t0 = (qpx * rx + qpy * ry) / rr;
        const double t1 = t0 + (sx * rx + sy * ry) / rr;
        return std::max(std::min(t0, t1), 0.0) <= std::min(std::max(t0, t1), 1.0);
    }
    const double t = (qpx * sy - qpy * sx) / denom;
    const double u = (qpx * ry - qpy * rx) / denom;
    return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
}

// Every non-adjacent edge pair of an open polyline.
inline bool polyline_self_intersects(const std::vector<P>& pts)
{
    const std::size_t edges = pts.size() < 2 ? 0 : pts.size() - 1;
    for (std::size_t i = 0; i < edges; ++i) {
        for (std::size_t j = i + 2; j < edges; ++j) {
            if (segments_cross(pts[i], pts[i + 1], pts[j], pts[j + 1])) {
                return true;
            }
        }
    }
    return false;
}

inline bool dominates(const std::vector<double>& a, const std::vector<double>& b)
{
    bool better = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) {
            return false;
        }
        better = better || a[i] < b[i];
    }
    return better;
}

// Front rank of every point by repeated extraction of the non-dominated set.
inline std::vector<std::size_t> front_ranks(const std::vector<std::vector<double>>& objs)
{
    const std::size_t n = objs.size();
    std::vector<std::size_t> rank(n, SIZE_MAX);
    std::size_t assigned = 0;
    for (std::size_t r = 0; assigned < n; ++r) {
        std::vector<std::size_t> front;
        for (std::size_t i = 0; i < n; ++i) {
            if (rank[i] != SIZE_MAX) {
                continue;
            }
            bool dominated = false;
            for (std::size_t j = 0; j < n && !dominated; ++j) {
                dominated = j != i && rank[j] == SIZE_MAX && dominates(objs[j], objs[i]);
            }
            if (!dominated) {
                front.push_back(i);
            }
        }
        for (auto i : front) {
            rank[i] = r;
        }
        assigned += front.size();
    }
    return rank;
}

inline double pairwise_mean(const std::vector<double>& v)
{
    double s = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (i < j) {
                s += std::fabs(v[i] - v[j]);
                ++pairs;
            }
        }
    }
    return pairs ? s / pairs : 0.0;
}

// Exact two-sided rank-sum p-value for tie-free samples by counting every
// subset of size n1 of ranks 1..n1+n2, bucketed by rank sum.
inline double exact_ranksum_p(int n1, int n2, int observed_sum)
{
    const int n = n1 + n2;
    const int max_sum = n * (n + 1) / 2;
    // ways[k][s]: subsets of size k with rank sum s
    std::vector<std::vector<double>> ways(n1 + 1, std::vector<double>(max_sum + 1, 0.0));
    ways[0][0] = 1.0;
    for (int r = 1; r <= n; ++r) {
        for (int k = std::min(r, n1); k >= 1; --k) {
            for (int s = max_sum; s >= r; --s) {
                ways[k][s] += ways[k - 1][s - r];
            }
        }
    }
    double total = 0.0, lower = 0.0, upper = 0.0;
    for (int s = 0; s <= max_sum; ++s) {
        total += ways[n1][s];
        if (s <= observed_sum) {
            lower += ways[n1][s];
        }
        if (s >= observed_sum) {
            upper += ways[n1][s];
        }
    }
    return std::min(1.0, 2.0 * std::min(lower, upper) / total);
}

inline double auc_pairs(const std::vector<int>& labels, const std::vector<double>& scores)
{
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (labels[i] == 1 && labels[j] == 0) {
                num += scores[i] > scores[j] ? 1.0 : (scores[i] == scores[j] ? 0.5 : 0.0);
                den += 1.0;
            }
        }
    }
    return num / den;
}

inline double f1_confusion(const std::vector<int>& labels, const std::vector<int>& pred)
{
    int m[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ++m[labels[i]][pred[i]];
    }
    const double tp = m[1][1], fp = m[0][1], fn = m[1][0];
    if (tp == 0.0) {
        return 0.0;
    }
    const double precision = tp / (tp + fp);
    const double recall = tp / (tp + fn);
    return 2.0 * precision * recall / (precision + recall);
}

// Area of the union of rectangles [x, rx] x [y, ry] via coordinate compression.
inline double dominated_area(const std::vector<std::pair<double, double>>& pts, double rx, double ry)
{
    std::vector<double> xs{rx}, ys{ry};
    for (const auto& [x, y] : pts) {
        xs.push_back(x);
        ys.push_back(y);
    }
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
            const double cx = (xs[i] + xs[i + 1]) / 2.0, cy = (ys[j] + ys[j + 1]) / 2.0;
            const bool covered = std::any_of(pts.begin(), pts.end(), [&](const auto& p) { return p.first <= cx && p.second <= cy; });
            if (covered) {
                area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
            }
        }
    }
    return area;
}

} // namespace oracle
