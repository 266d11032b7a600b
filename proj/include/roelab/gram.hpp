#pragma once

// Gram matrix of a partition of unity, its spectral square roots, the
// isometry U = Phi G^{-1/2} from l^2(D) into the grid L^2 model, and the
// projection P_D = U U^* onto span{phi_u}.
//
// Adjoints are taken for the quadrature inner product. The torus grid has a
// uniform weight w, so U^* = w U^T.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "roelab/linalg.hpp"
#include "roelab/pou.hpp"

namespace roelab {

inline constexpr double kGramEigenFloor = 1e-10;

struct GramData {
    Matrix G;
    Vector eigvals;
    Matrix G_half;
    Matrix G_invhalf;
    double lambda_min = 0.0;
    double lambda_max = 0.0;

    double condition() const { return lambda_max / lambda_min; }
};

inline GramData gram(const PartitionOfUnity& P)
{
    GramData g;
    g.G = P.space.weight() * (P.phi.transpose() * P.phi);
    g.G = 0.5 * (g.G + g.G.transpose());
    const SymmetricSpectrum spec(g.G);
    g.eigvals = spec.values;
    g.lambda_min = spec.values[0];
    g.lambda_max = spec.values[spec.values.size() - 1];
    if (g.lambda_min < kGramEigenFloor)
        throw Error("near-singular Gram matrix: smallest eigenvalue " + std::to_string(g.lambda_min));
    g.G_half = spec.power(0.5);
    g.G_invhalf = spec.power(-0.5);
    return g;
}

/// min_u mu_grid(B_{r/6}(u)): the diagonal block over the plateau union.
inline double gram_lower_bound(const PartitionOfUnity& P)
{
    double best = std::numeric_limits<double>::infinity();
    for (const auto& u : P.delone.points()) best = std::min(best, ball_measure(P.space, u, P.r / 6));
    return best;
}

/// N_adj^2 * max |g_uv| with N_adj the largest count of v having g_uv != 0.
inline double gram_upper_bound(const GramData& g)
{
    Eigen::Index adj = 0;
    for (Eigen::Index u = 0; u < g.G.rows(); ++u)
        adj = std::max(adj, static_cast<Eigen::Index>((g.G.row(u).array() != 0.0).count()));
    const double gmax = max_abs(g.G);
    return static_cast<double>(adj * adj) * gmax;
}

struct Isometry {
    TorusSpace space;
    DeloneSet delone;
    /// nodes x sites, columns psi_u.
    Matrix U;

    double weight() const { return space.weight(); }
    /// U^* as a matrix: sites x nodes.
    Matrix adjoint() const { return weight() * U.transpose(); }
    /// max |U^* W U - I|.
    double orthonormality_defect() const
    {
        const Matrix e = weight() * (U.transpose() * U) - Matrix::Identity(U.cols(), U.cols());
        return max_abs(e);
    }
    /// P_D = U U^*, dense nodes x nodes.
    Matrix projection() const { return weight() * (U * U.transpose()); }
};

inline Isometry isometry(const PartitionOfUnity& P, const GramData& g)
{
    return Isometry{P.space, P.delone, P.phi * g.G_invhalf};
}

template <typename Scalar>
GridFunction<Scalar> project(const Isometry& I, const GridFunction<Scalar>& f)
{
    if (!(I.space == f.space())) throw Error("projection of a function on a different space");
    const auto U = I.U.template cast<Scalar>();
    Vec<Scalar> coeff = static_cast<Scalar>(I.weight()) * (U.transpose() * f.values());
    return GridFunction<Scalar>(f.space(), U * coeff);
}

/// Everything built from one Delone set of a schedule.
struct Stage {
    DeloneSet delone;
    PartitionOfUnity pou;
    GramData gram;
    Isometry iso;
};

inline Stage make_stage(const DeloneSet& D)
{
    auto p = build_pou(D);
    auto g = gram(p);
    auto u = isometry(p, g);
    return Stage{D, std::move(p), std::move(g), std::move(u)};
}

/// Greedy Delone sets for each target covering radius, all from the same seed.
inline std::vector<Stage> build_schedule(const TorusSpace& space, std::span<const double> targets,
                                         const Point& seed)
{
    std::vector<Stage> out;
    out.reserve(targets.size());
    for (double t : targets) out.push_back(make_stage(greedy_delone(space, t, seed)));
    return out;
}

/// Empirical modulus of continuity: max |f(x) - f(y)| over node pairs with d(x,y) < delta.
template <typename Scalar>
double modulus_of_continuity(const GridFunction<Scalar>& f, double delta)
{
    const auto& space = f.space();
    const auto n = space.num_nodes();
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point x = space.node(i);
        for (std::size_t j = i + 1; j < n; ++j)
            if (space.dist(x, space.node(j)) < delta) best = std::max(best, std::abs(f[i] - f[j]));
    }
    return best;
}

struct StrongConvergenceRow {
    std::size_t n = 0;
    double R_cover = 0.0;
    /// ||f - P_{D_n} f||.
    double error = 0.0;
    /// ||f - g_n|| for g_n = sum_u f(u) phi_u, the witness in H^{D_n}.
    double witness_error = 0.0;
    /// omega_f(2R_n + site offset) * sqrt(mu(X)).
    double bound = 0.0;
};

struct StrongConvergence {
    std::vector<StrongConvergenceRow> rows;
    bool bound_ok = true;
    bool strictly_decreasing = true;
    bool schedule_decreasing = true;
    double final_error = 0.0;
};

/// Projection error of f along a schedule against the a-priori bound from
/// uniform continuity. Off-grid sites use f at their nearest node, which
/// widens the modulus radius by the site offset.
template <typename Scalar>
StrongConvergence strong_convergence(const GridFunction<Scalar>& f, std::span<const Stage> seq)
{
    StrongConvergence out;
    const auto& space = f.space();
    for (std::size_t n = 0; n < seq.size(); ++n) {
        const auto& st = seq[n];
        StrongConvergenceRow row;
        row.n = n + 1;
        row.R_cover = st.delone.R_cover();
        const auto pf = project(st.iso, f);
        row.error = GridFunction<Scalar>(space, f.values() - pf.values()).norm();

        double offset = 0.0;
        Vec<Scalar> at_sites(static_cast<Eigen::Index>(st.delone.size()));
        for (std::size_t u = 0; u < st.delone.size(); ++u) {
            const auto k = space.nearest_node(st.delone[u]);
            offset = std::max(offset, space.dist(space.node(k), st.delone[u]));
            at_sites[static_cast<Eigen::Index>(u)] = f[k];
        }
        const Vec<Scalar> g = st.pou.phi.template cast<Scalar>() * at_sites;
        row.witness_error = GridFunction<Scalar>(space, f.values() - g).norm();
        row.bound = modulus_of_continuity(f, 2 * st.pou.R + offset) * std::sqrt(space.measure());

        if (row.error > row.bound + 1e-8) out.bound_ok = false;
        if (n > 0) {
            if (!(row.error < out.rows.back().error)) out.strictly_decreasing = false;
            if (!(row.R_cover < out.rows.back().R_cover)) out.schedule_decreasing = false;
        }
        out.rows.push_back(row);
    }
    if (!out.rows.empty()) out.final_error = out.rows.back().error;
    return out;
}

} // namespace roelab
