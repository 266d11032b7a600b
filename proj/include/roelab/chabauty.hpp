#pragma once

// The capped Chabauty-type metric rho on closed subsets, with x0-centred
// balls B_{1/eps}(x0) and closed eps-neighbourhoods, plus the eps-net
// construction behind compactness of the space of controlled Delone sets.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "roelab/delone.hpp"

namespace roelab {

struct RhoResult {
    enum class Direction { FirstToSecond, SecondToFirst };

    /// min(1, max of directed point constraints).
    double value = 0.0;
    /// Uncapped max constraint; equals value unless the cap at 1 applied.
    double raw = 0.0;
    Point witness{};
    Direction direction = Direction::FirstToSecond;
};

namespace detail {

struct Directed {
    double value = 0.0;
    Point witness{};
};

// Constraint of x in A against B: x is fine for every eps >= min(d(x,B), 1/d(x,x0)),
// since it is either inside the closed eps-neighbourhood of B or outside the
// open ball B_{1/eps}(x0).
inline Directed directed_rho(const TorusSpace& space, std::span<const Point> a,
                             std::span<const Point> b)
{
    Directed out;
    const auto& x0 = space.basepoint();
    for (const auto& x : a) {
        const double to_base = space.dist(x, x0);
        const double ball = to_base > 0.0 ? 1.0 / to_base : std::numeric_limits<double>::infinity();
        const double c = std::min(dist_to_set(space, x, b), ball);
        if (c > out.value) {
            out.value = c;
            out.witness = x;
        }
    }
    return out;
}

inline RhoResult rho_unchecked(const TorusSpace& space, std::span<const Point> d1,
                               std::span<const Point> d2)
{
    const auto fwd = directed_rho(space, d1, d2);
    const auto bwd = directed_rho(space, d2, d1);
    RhoResult r;
    if (fwd.value >= bwd.value) {
        r.raw = fwd.value;
        r.witness = fwd.witness;
        r.direction = RhoResult::Direction::FirstToSecond;
    } else {
        r.raw = bwd.value;
        r.witness = bwd.witness;
        r.direction = RhoResult::Direction::SecondToFirst;
    }
    r.value = std::min(1.0, r.raw);
    return r;
}

} // namespace detail

/// Closed-form rho. Pass space.nodes() to stand in for X itself.
inline RhoResult rho(const TorusSpace& space, std::span<const Point> d1, std::span<const Point> d2)
{
    if (d1.empty() || d2.empty()) throw Error("rho is defined on nonempty sets");
    return detail::rho_unchecked(space, d1, d2);
}

inline RhoResult rho(const DeloneSet& a, const DeloneSet& b)
{
    return rho(a.space(), a.points(), b.points());
}

struct RhoRow {
    std::size_t n = 0;
    double rho = 0.0;
    double R_cover = 0.0;
    double r_pack = 0.0;
    /// R(D_n) <= rho(D_n, X) + L/(2N); only filled against X.
    std::optional<bool> covering_bound_ok;
};

struct RhoSequence {
    std::vector<RhoRow> rows;
    /// Grid surrogate error for X, half a cell diagonal.
    double resolution = 0.0;
    bool non_increasing = true;
    bool covering_bound_ok = true;
};

namespace detail {

inline RhoSequence rho_rows(const TorusSpace& space, std::span<const DeloneSet> sets,
                            std::span<const Point> target, bool target_is_space)
{
    if (sets.empty()) throw Error("rho sequence needs at least one set");
    RhoSequence out;
    out.resolution = space.half_cell_diagonal();
    // Grid slack for the covering bound.
    const double slack = space.side() / (2.0 * space.grid_n());
    for (std::size_t n = 0; n < sets.size(); ++n) {
        RhoRow row;
        row.n = n + 1;
        row.rho = rho(space, sets[n].points(), target).value;
        row.R_cover = sets[n].R_cover();
        row.r_pack = sets[n].r_pack();
        if (target_is_space) {
            row.covering_bound_ok = row.R_cover <= row.rho + slack;
            out.covering_bound_ok = out.covering_bound_ok && *row.covering_bound_ok;
        }
        if (n > 0 && row.rho > out.rows.back().rho) out.non_increasing = false;
        out.rows.push_back(row);
    }
    return out;
}

} // namespace detail

/// rho(D_n, X) and R(D_n) per n, checking R(D_n) <= rho(D_n, X) + L/(2N).
inline RhoSequence rho_sequence(const TorusSpace& space, std::span<const DeloneSet> sets)
{
    const auto grid = space.nodes();
    return detail::rho_rows(space, sets, grid, true);
}

inline RhoSequence rho_sequence(const TorusSpace& space, std::span<const DeloneSet> sets,
                                std::span<const Point> target)
{
    return detail::rho_rows(space, sets, target, false);
}

struct NetCoverage {
    std::size_t net_index = 0;
    double distance = 0.0;
};

struct EpsilonNet {
    double eps = 0.0;
    /// The finite eps-dense set A in the closed ball B_{1/eps}(x0).
    std::vector<Point> dense_set;
    /// Distinct subsets A_i = A intersect D^(+eps), as sorted indices into dense_set.
    std::vector<std::vector<std::size_t>> net;
    std::vector<NetCoverage> coverage;
    bool all_covered = true;
};

/// Builds A_i = A intersect D^(+eps) for each candidate D and checks rho(D, A_i) <= eps.
inline EpsilonNet epsilon_net(const TorusSpace& space, double eps, std::vector<Point> dense_set,
                              std::span<const std::vector<Point>> candidates)
{
    if (!(eps > 0.0 && eps <= 1.0)) throw Error("eps must lie in (0, 1]");
    EpsilonNet out;
    out.eps = eps;
    out.dense_set = std::move(dense_set);
    std::map<std::vector<std::size_t>, std::size_t> index_of;
    for (const auto& D : candidates) {
        if (D.empty()) throw Error("epsilon net candidate is empty");
        std::vector<std::size_t> subset;
        for (std::size_t i = 0; i < out.dense_set.size(); ++i)
            if (dist_to_set(space, out.dense_set[i], D) <= eps) subset.push_back(i);
        auto [it, inserted] = index_of.try_emplace(subset, out.net.size());
        if (inserted) out.net.push_back(subset);

        std::vector<Point> ai;
        ai.reserve(subset.size());
        for (auto i : subset) ai.push_back(out.dense_set[i]);
        // A_i may be empty only if D misses the ball entirely; then d(x, A_i) = inf
        // and the ball term alone bounds the constraint.
        const double d = std::min(1.0, detail::rho_unchecked(space, D, ai).raw);
        out.coverage.push_back({it->second, d});
        if (d > eps) out.all_covered = false;
    }
    return out;
}

/// Same, with A built by farthest-point sampling over the nodes of the closed
/// ball B_{1/eps}(x0). Its grid radius leaves room for off-grid candidate
/// points, so A is eps-dense in the continuum ball.
inline EpsilonNet epsilon_net(const TorusSpace& space, double eps,
                              std::span<const std::vector<Point>> candidates)
{
    if (!(eps > 0.0 && eps <= 1.0)) throw Error("eps must lie in (0, 1]");
    const double target = eps - space.half_cell_diagonal();
    if (target < space.step()) throw Error("eps smaller than grid resolution");

    const auto& x0 = space.basepoint();
    std::vector<std::size_t> ball;
    for (std::size_t i = 0; i < space.num_nodes(); ++i)
        if (space.dist(space.node(i), x0) <= 1.0 / eps) ball.push_back(i);
    if (ball.empty()) throw Error("eps ball contains no grid node");

    std::size_t start = ball.front();
    if (const auto near = space.nearest_node(x0); space.dist(space.node(near), x0) <= 1.0 / eps)
        start = near;
    std::vector<Point> dense{space.node(start)};
    std::vector<double> gap(ball.size());
    for (std::size_t k = 0; k < ball.size(); ++k) gap[k] = space.dist(space.node(ball[k]), dense[0]);
    for (;;) {
        std::size_t far = 0;
        for (std::size_t k = 1; k < gap.size(); ++k)
            if (gap[k] > gap[far]) far = k;
        if (gap[far] <= target) break;
        const Point p = space.node(ball[far]);
        dense.push_back(p);
        for (std::size_t k = 0; k < gap.size(); ++k)
            gap[k] = std::min(gap[k], space.dist(space.node(ball[k]), p));
    }
    return epsilon_net(space, eps, std::move(dense), candidates);
}

} // namespace roelab
