#pragma once

// Voronoi cell partition of the grid for a coarse Delone set, the relation
// v < u (supp phi_v inside V_u), cell dimension counts and the cell
// projections Q_u onto span{phi_v : v < u}.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "roelab/gram.hpp"

namespace roelab {

struct CellPartition {
    TorusSpace space;
    DeloneSet delone;
    /// Cell index per grid node.
    std::vector<std::size_t> assign;
    /// Node list per site.
    std::vector<std::vector<std::size_t>> cells;
    /// Radii of the (V3) sweep.
    std::vector<double> deltas;
    /// boundary_mass[u][k]: mass of V_u nodes whose bisector margin is <= deltas[k].
    std::vector<std::vector<double>> boundary_mass;

    std::size_t min_cell_size() const
    {
        std::size_t m = std::numeric_limits<std::size_t>::max();
        for (const auto& c : cells) m = std::min(m, c.size());
        return m;
    }
};

/// Nearest-site assignment, ties to the lower site index.
///
/// The (V3) proxy uses the bisector margin min_{v != u} (d(x,v) - d(x,u)) / 2,
/// a lower bound on the distance from x to the boundary of its cell.
inline CellPartition voronoi_cells(const DeloneSet& D)
{
    const auto& space = D.space();
    const auto n = space.num_nodes();
    CellPartition C{space, D, std::vector<std::size_t>(n), std::vector<std::vector<std::size_t>>(D.size()), {}, {}};
    std::vector<double> margin(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Point x = space.node(i);
        std::size_t best = 0;
        double d1 = std::numeric_limits<double>::infinity();
        double d2 = std::numeric_limits<double>::infinity();
        for (std::size_t u = 0; u < D.size(); ++u) {
            const double d = space.dist(x, D[u]);
            if (d < d1) {
                d2 = d1;
                d1 = d;
                best = u;
            } else if (d < d2) {
                d2 = d;
            }
        }
        C.assign[i] = best;
        C.cells[best].push_back(i);
        margin[i] = std::isinf(d2) ? std::numeric_limits<double>::infinity() : (d2 - d1) / 2;
    }

    for (double d = std::max(D.R_cover(), space.step()); d >= space.step() / 2; d /= 2) C.deltas.push_back(d);
    C.boundary_mass.assign(D.size(), std::vector<double>(C.deltas.size(), 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < C.deltas.size(); ++k)
            if (margin[i] <= C.deltas[k]) C.boundary_mass[C.assign[i]][k] += space.weight();
    return C;
}

struct CellReport {
    /// Every node in exactly one cell.
    bool partition_exact = true;
    /// Nodes of B_{r/2}(u) lie in V_u.
    bool inner_ball_ok = true;
    /// Nodes of V_u lie in B_{R+step}(u), hence in B_{2R}(u).
    bool outer_ball_ok = true;
    bool cells_nonempty = true;
};

inline CellReport verify_cells(const CellPartition& C)
{
    const auto& space = C.space;
    const auto& D = C.delone;
    CellReport rep;
    std::vector<int> seen(space.num_nodes(), 0);
    for (const auto& cell : C.cells)
        for (auto i : cell) ++seen[i];
    rep.partition_exact = std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
    for (std::size_t u = 0; u < D.size(); ++u) {
        if (C.cells[u].empty()) rep.cells_nonempty = false;
        for (auto i : C.cells[u])
            if (space.dist(space.node(i), D[u]) > D.R_cover() + space.step()) rep.outer_ball_ok = false;
    }
    for (std::size_t i = 0; i < space.num_nodes(); ++i)
        for (std::size_t u = 0; u < D.size(); ++u)
            if (space.dist(space.node(i), D[u]) < D.r_pack() / 2 && C.assign[i] != u) rep.inner_ball_ok = false;
    return rep;
}

/// v < u: every node where phi_v^{D_n} > 0 is assigned to cell u.
inline bool precedes(std::size_t v, std::size_t u, const PartitionOfUnity& Pn, const CellPartition& C)
{
    const auto col = Pn.phi.col(static_cast<Eigen::Index>(v));
    for (Eigen::Index i = 0; i < col.size(); ++i)
        if (col[i] > 0.0 && C.assign[static_cast<std::size_t>(i)] != u) return false;
    return true;
}

/// Fine sites whose partition function is supported in one cell, grouped by cell.
inline std::vector<std::vector<std::size_t>> fine_members(const PartitionOfUnity& Pn, const CellPartition& C)
{
    std::vector<std::vector<std::size_t>> out(C.delone.size());
    for (std::size_t v = 0; v < Pn.delone.size(); ++v) {
        const auto col = Pn.phi.col(static_cast<Eigen::Index>(v));
        std::size_t owner = C.delone.size();
        bool single = true;
        for (Eigen::Index i = 0; i < col.size() && single; ++i) {
            if (!(col[i] > 0.0)) continue;
            const auto a = C.assign[static_cast<std::size_t>(i)];
            if (owner == C.delone.size()) owner = a;
            else if (owner != a) single = false;
        }
        if (single && owner < C.delone.size()) out[owner].push_back(v);
    }
    return out;
}

struct CellDims {
    std::vector<std::size_t> m_u;
    std::size_t m_min = 0;
    std::size_t m_max = 0;
    /// mu(B_{r(D)/2}(u)) and sum_{v<u} mu(B_{2R_n}(v)) per coarse site.
    std::vector<double> inner_measure;
    std::vector<double> support_measure;
    /// inner_measure <= support_measure; reported only.
    std::vector<bool> measure_check;
};

inline CellDims cell_dims(const PartitionOfUnity& Pn, const CellPartition& C)
{
    const auto members = fine_members(Pn, C);
    CellDims out;
    out.m_min = std::numeric_limits<std::size_t>::max();
    for (std::size_t u = 0; u < members.size(); ++u) {
        const auto m = members[u].size();
        out.m_u.push_back(m);
        out.m_min = std::min(out.m_min, m);
        out.m_max = std::max(out.m_max, m);
        const double inner = ball_measure(C.space, C.delone[u], C.delone.r_pack() / 2);
        double support = 0.0;
        for (auto v : members[u]) support += ball_measure(C.space, Pn.delone[v], 2 * Pn.R);
        out.inner_measure.push_back(inner);
        out.support_measure.push_back(support);
        out.measure_check.push_back(inner <= support);
    }
    return out;
}

/// Q_u: quadrature-orthogonal projection onto span{phi_v : v < u}.
struct CellProjection {
    TorusSpace space;
    std::size_t cell = 0;
    std::vector<std::size_t> members;
    /// nodes x |members|, orthonormal under the quadrature weight.
    Matrix basis;

    bool empty() const { return members.empty(); }
    Matrix matrix() const { return space.weight() * (basis * basis.transpose()); }
    Vector apply(const Vector& f) const { return basis * (space.weight() * (basis.transpose() * f)); }
};

inline CellProjection cell_projection(std::size_t u, const PartitionOfUnity& Pn, const CellPartition& C)
{
    const auto members = fine_members(Pn, C)[u];
    CellProjection Q{Pn.space, u, members, Matrix::Zero(static_cast<Eigen::Index>(Pn.space.num_nodes()), 0)};
    if (members.empty()) return Q;
    Matrix frame(Pn.phi.rows(), static_cast<Eigen::Index>(members.size()));
    for (std::size_t k = 0; k < members.size(); ++k)
        frame.col(static_cast<Eigen::Index>(k)) = Pn.phi.col(static_cast<Eigen::Index>(members[k]));
    Matrix sub = Pn.space.weight() * (frame.transpose() * frame);
    sub = 0.5 * (sub + sub.transpose());
    const SymmetricSpectrum spec(sub);
    if (spec.values[0] < kGramEigenFloor)
        throw Error("singular sub-Gram matrix for cell " + std::to_string(u));
    Q.basis = frame * spec.power(-0.5);
    return Q;
}

} // namespace roelab
