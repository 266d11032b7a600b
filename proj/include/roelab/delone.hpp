#pragma once

// Delone sets on the torus: packing/covering radii, farthest-point
// generation, control functions.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "roelab/space.hpp"

namespace roelab {

/// Exact minimum pairwise torus distance. For a singleton the convention is
/// diam(X); `singleton` reports when it was applied.
inline double packing_radius(const TorusSpace& space, std::span<const Point> points,
                             bool* singleton = nullptr)
{
    if (points.empty()) throw Error("packing radius of an empty set");
    if (singleton) *singleton = points.size() == 1;
    if (points.size() == 1) return space.diameter();
    double r = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            r = std::min(r, space.dist(points[i], points[j]));
    return r;
}

/// Grid-sampled covering radius: max over nodes of the distance to the set.
/// The true covering radius exceeds it by at most half a cell diagonal.
inline double covering_radius(const TorusSpace& space, std::span<const Point> points)
{
    if (points.empty()) throw Error("covering radius of an empty set");
    double R = 0.0;
    for (std::size_t i = 0; i < space.num_nodes(); ++i)
        R = std::max(R, dist_to_set(space, space.node(i), points));
    return R;
}

class DeloneSet {
public:
    DeloneSet(const TorusSpace& space, std::vector<Point> points) : space_(space)
    {
        if (points.empty()) throw Error("a Delone set needs at least one point");
        for (auto& p : points) p = space.reduce(p);
        points_ = std::move(points);
        r_pack_ = packing_radius(space_, points_, &singleton_);
        // Reduction mod L can leave copies of one point a few ulps apart.
        if (!(r_pack_ > 1e-12 * space_.side())) throw Error("Delone set points must be pairwise distinct");
        R_cover_ = covering_radius(space_, points_);
    }

    const TorusSpace& space() const { return space_; }
    const std::vector<Point>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    const Point& operator[](std::size_t i) const { return points_[i]; }
    double r_pack() const { return r_pack_; }
    double R_cover() const { return R_cover_; }
    /// True when r_pack() is the singleton convention diam(X).
    bool singleton() const { return singleton_; }

private:
    TorusSpace space_;
    std::vector<Point> points_;
    double r_pack_ = 0.0;
    double R_cover_ = 0.0;
    bool singleton_ = false;
};

/// Monotone continuous F: [0,1] -> [0,1] with F(0) = 0.
struct ControlFunction {
    enum class Kind { Linear, Power };

    Kind kind = Kind::Linear;
    double kappa = 0.5;
    double exponent = 1.0;

    static ControlFunction linear(double kappa = 0.5)
    {
        if (!(kappa >= 0.0 && kappa <= 1.0)) throw Error("linear control slope must lie in [0,1]");
        return {Kind::Linear, kappa, 1.0};
    }
    /// kappa * t^p, p > 0.
    static ControlFunction power(double kappa, double p)
    {
        if (!(kappa >= 0.0 && kappa <= 1.0)) throw Error("control scale must lie in [0,1]");
        if (!(p > 0.0)) throw Error("control exponent must be positive");
        return {Kind::Power, kappa, p};
    }

    double operator()(double t) const
    {
        t = std::clamp(t, 0.0, 1.0);
        const double v = kind == Kind::Linear ? kappa * t : kappa * std::pow(t, exponent);
        return std::clamp(v, 0.0, 1.0);
    }
};

/// r(D) >= F(R(D)). By monotonicity of F this is the quantified definition.
inline bool is_controlled(const DeloneSet& D, const ControlFunction& F)
{
    if (D.R_cover() > 1.0) throw Error("outside D_F, rescale the space");
    return D.r_pack() >= F(D.R_cover());
}

/// Max over u in D of #(D intersect open B_R(u)).
inline std::size_t max_ball_count(const DeloneSet& D, double R)
{
    if (!(R > 0.0)) throw Error("ball count needs R > 0");
    std::size_t best = 0;
    for (const auto& u : D.points()) {
        std::size_t c = 0;
        for (const auto& v : D.points())
            if (D.space().dist(u, v) < R) ++c;
        best = std::max(best, c);
    }
    return best;
}

/// Farthest-point sampling over grid nodes, starting from `seed`, until the
/// grid covering radius is at most target_R. Ties go to the lower node index.
/// Each added node is at distance >= the final covering radius from all
/// earlier points, so the result has r(D) >= R(D).
inline DeloneSet greedy_delone(const TorusSpace& space, double target_R, const Point& seed)
{
    if (target_R < space.step()) throw Error("unreachable covering radius");
    const Point s = space.reduce(seed);
    std::vector<Point> points{s};
    std::vector<double> gap(space.num_nodes());
    for (std::size_t i = 0; i < gap.size(); ++i) gap[i] = space.dist(space.node(i), s);
    for (;;) {
        std::size_t far = 0;
        for (std::size_t i = 1; i < gap.size(); ++i)
            if (gap[i] > gap[far]) far = i;
        if (gap[far] <= target_R) break;
        const Point p = space.node(far);
        points.push_back(p);
        for (std::size_t i = 0; i < gap.size(); ++i)
            gap[i] = std::min(gap[i], space.dist(space.node(i), p));
    }
    return DeloneSet(space, std::move(points));
}

} // namespace roelab
