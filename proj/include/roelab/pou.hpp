#pragma once

// Lipschitz partition of unity subordinate to the cover
//   W_u = B_{2R}(u) \ union_{v != u} closed B_{r/6}(v),
// with phi_u = h_u / sum_v h_v and h_u(x) = d(x, X \ W_u).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "roelab/delone.hpp"
#include "roelab/linalg.hpp"

namespace roelab {

/// Distance from x to the closed set {y : d(y,u) >= radius}, the complement of
/// the open ball B_radius(u). +inf when the complement is empty.
///
/// For radius <= L/2 the ray from u through x stays minimizing up to length
/// radius, giving radius - d(x,u). Larger balls on T^2 wrap onto themselves;
/// the complement is then the plane minus the union of disks around the
/// lattice images of u, and its nearest point is either a radial projection
/// onto one circle or an intersection of two circles.
inline double distance_to_ball_complement(const TorusSpace& space, const Point& u, const Point& x,
                                          double radius)
{
    const double a = space.dist(x, u);
    if (a >= radius) return 0.0;
    if (radius <= space.side() / 2) return radius - a;
    if (radius > space.diameter()) return std::numeric_limits<double>::infinity();

    const double L = space.side();
    const Point d = space.displacement(u, x);
    const double px = d[0], py = d[1];
    constexpr int kReach = 2;
    std::vector<std::array<double, 2>> centers;
    for (int i = -kReach; i <= kReach; ++i)
        for (int j = -kReach; j <= kReach; ++j) centers.push_back({i * L, j * L});

    const double tol = 1e-12 * std::max(1.0, radius);
    auto in_complement = [&](double qx, double qy) {
        for (const auto& c : centers)
            if (std::hypot(qx - c[0], qy - c[1]) < radius - tol) return false;
        return true;
    };

    double best = std::numeric_limits<double>::infinity();
    auto consider = [&](double qx, double qy) {
        if (in_complement(qx, qy)) best = std::min(best, std::hypot(qx - px, qy - py));
    };
    for (const auto& c : centers) {
        const double dx = px - c[0], dy = py - c[1];
        const double len = std::hypot(dx, dy);
        if (len > 0.0) consider(c[0] + radius * dx / len, c[1] + radius * dy / len);
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
        for (std::size_t l = k + 1; l < centers.size(); ++l) {
            const double ex = centers[l][0] - centers[k][0], ey = centers[l][1] - centers[k][1];
            const double sep = std::hypot(ex, ey);
            if (sep > 2 * radius) continue;
            const double h = std::sqrt(std::max(0.0, radius * radius - sep * sep / 4));
            const double mx = centers[k][0] + ex / 2, my = centers[k][1] + ey / 2;
            consider(mx - h * ey / sep, my + h * ex / sep);
            consider(mx + h * ey / sep, my - h * ex / sep);
        }
    }
    return best;
}

struct PartitionOfUnity {
    TorusSpace space;
    DeloneSet delone;
    /// nodes x sites; column u samples phi_u.
    Matrix phi;
    /// Packing and covering radii the construction used.
    double r = 0.0;
    double R = 0.0;
    /// Per-column grid Lipschitz estimate.
    std::vector<double> lipschitz_est;
    /// Grid step is not below r/12, so the r/6 plateau is barely resolved.
    bool coarse_grid_warning = false;
};

namespace detail {

/// Nearest and second-nearest site per node (distance and index).
struct TwoNearest {
    double d1 = std::numeric_limits<double>::infinity();
    double d2 = std::numeric_limits<double>::infinity();
    std::size_t i1 = 0;
};

inline TwoNearest two_nearest(const TorusSpace& space, const Point& x, const std::vector<Point>& sites)
{
    TwoNearest t;
    for (std::size_t v = 0; v < sites.size(); ++v) {
        const double d = space.dist(x, sites[v]);
        if (d < t.d1) {
            t.d2 = t.d1;
            t.d1 = d;
            t.i1 = v;
        } else if (d < t.d2) {
            t.d2 = d;
        }
    }
    return t;
}

inline std::vector<double> column_lipschitz(const TorusSpace& space, const Matrix& phi)
{
    std::vector<double> out(static_cast<std::size_t>(phi.cols()), 0.0);
    for (Eigen::Index u = 0; u < phi.cols(); ++u) {
        double best = 0.0;
        for (std::size_t i = 0; i < space.num_nodes(); ++i)
            for (int axis = 0; axis < space.dim(); ++axis) {
                const auto j = space.forward_neighbor(i, axis);
                best = std::max(best, std::fabs(phi(static_cast<Eigen::Index>(j), u) -
                                                phi(static_cast<Eigen::Index>(i), u)));
            }
        out[static_cast<std::size_t>(u)] = best / space.step();
    }
    return out;
}

} // namespace detail

/// Radius the cover uses for R: the grid covering radius, floored at half a
/// step so that a set containing every node still gets nonempty balls.
inline double cover_radius_used(const DeloneSet& D)
{
    return std::max(D.R_cover(), D.space().step() / 2);
}

/// h_u(x) = d(x, X \ W_u), evaluated in closed form.
inline double h_value(const DeloneSet& D, std::size_t u, const Point& x, double r, double R)
{
    const auto& space = D.space();
    double h = distance_to_ball_complement(space, D[u], x, 2 * R);
    for (std::size_t v = 0; v < D.size(); ++v)
        if (v != u) h = std::min(h, space.dist(x, D[v]) - r / 6);
    return std::max(0.0, h);
}

inline PartitionOfUnity build_pou(const DeloneSet& D)
{
    const auto& space = D.space();
    const double r = D.r_pack();
    const double R = cover_radius_used(D);
    const auto n = static_cast<Eigen::Index>(space.num_nodes());
    const auto m = static_cast<Eigen::Index>(D.size());

    Matrix h = Matrix::Zero(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Point x = space.node(static_cast<std::size_t>(i));
        const auto near = detail::two_nearest(space, x, D.points());
        bool unbounded = false;
        for (Eigen::Index u = 0; u < m; ++u) {
            const auto uu = static_cast<std::size_t>(u);
            if (space.dist(x, D[uu]) >= 2 * R) continue;
            const double other = (uu == near.i1 ? near.d2 : near.d1) - r / 6;
            const double v = std::max(0.0, std::min(distance_to_ball_complement(space, D[uu], x, 2 * R), other));
            if (std::isinf(v)) unbounded = true; // singleton with W_u = X
            h(i, u) = v;
        }
        if (unbounded) {
            // Only a singleton has an infinite h; its partition is the constant 1.
            for (Eigen::Index u = 0; u < m; ++u) h(i, u) = std::isinf(h(i, u)) ? 1.0 : 0.0;
        }
        const double total = h.row(i).sum();
        if (!(total > 0.0)) throw Error("cover failure at node " + std::to_string(i));
        h.row(i) /= total;
    }

    PartitionOfUnity p{space, D, std::move(h), r, R, {}, !(space.step() < r / 12)};
    p.lipschitz_est = detail::column_lipschitz(space, p.phi);
    return p;
}

struct PouReport {
    double max_row_sum_error = 0.0;
    /// Count and size of nonzero phi_u at nodes with d(x,u) >= 2R.
    std::size_t support_violations = 0;
    double max_support_violation = 0.0;
    /// Min phi_u over nodes with d(x,u) < r/6 - step/2; nullopt if no such node.
    std::optional<double> min_plateau_value;
    std::vector<double> lipschitz;
    double lipschitz_max = 0.0;
    /// Largest grid-ball radius such that every node's ball of grid nodes lies
    /// in some W_u, capped at diam(X).
    double lebesgue_empirical = 0.0;
    /// min(5r/12, min(r/4, R)).
    double lebesgue_bound = 0.0;
    bool lebesgue_ok = false;
};

namespace detail {

// Grid membership in W_u, matching the strict/closed conventions of the cover.
inline bool in_cover_set(const DeloneSet& D, std::size_t u, const Point& x, double r, double R)
{
    const auto& space = D.space();
    if (!(space.dist(x, D[u]) < 2 * R)) return false;
    for (std::size_t v = 0; v < D.size(); ++v)
        if (v != u && space.dist(x, D[v]) <= r / 6) return false;
    return true;
}

} // namespace detail

inline PouReport verify_pou(const PartitionOfUnity& P)
{
    const auto& space = P.space;
    const auto& D = P.delone;
    const auto n = space.num_nodes();
    const auto m = D.size();
    PouReport rep;

    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        rep.max_row_sum_error = std::max(rep.max_row_sum_error, std::fabs(P.phi.row(ii).sum() - 1.0));
        const Point x = space.node(i);
        for (std::size_t u = 0; u < m; ++u) {
            const double v = P.phi(ii, static_cast<Eigen::Index>(u));
            const double d = space.dist(x, D[u]);
            if (d >= 2 * P.R && v != 0.0) {
                ++rep.support_violations;
                rep.max_support_violation = std::max(rep.max_support_violation, std::fabs(v));
            }
            if (d < P.r / 6 - space.step() / 2)
                rep.min_plateau_value = std::min(rep.min_plateau_value.value_or(1.0), v);
        }
    }
    rep.lipschitz = P.lipschitz_est;
    for (double l : rep.lipschitz) rep.lipschitz_max = std::max(rep.lipschitz_max, l);

    // Complement node lists per site, then for each node the best site's
    // distance to its complement.
    std::vector<std::vector<std::size_t>> outside(m);
    std::vector<std::vector<char>> inside(m, std::vector<char>(n, 0));
    for (std::size_t u = 0; u < m; ++u)
        for (std::size_t i = 0; i < n; ++i) {
            if (detail::in_cover_set(D, u, space.node(i), P.r, P.R)) inside[u][i] = 1;
            else outside[u].push_back(i);
        }
    const double cap = space.diameter();
    double lebesgue = cap;
    for (std::size_t i = 0; i < n; ++i) {
        const Point x = space.node(i);
        double best = 0.0;
        for (std::size_t u = 0; u < m && best < cap; ++u) {
            if (!inside[u][i]) continue;
            double d = cap;
            for (auto j : outside[u]) d = std::min(d, space.dist(x, space.node(j)));
            best = std::max(best, d);
        }
        lebesgue = std::min(lebesgue, best);
    }
    rep.lebesgue_empirical = lebesgue;
    rep.lebesgue_bound = std::min(5 * P.r / 12, std::min(P.r / 4, P.R));
    rep.lebesgue_ok = rep.lebesgue_empirical >= rep.lebesgue_bound - space.step();
    return rep;
}

} // namespace roelab
