#pragma once

// Finite-propagation operators on l^2(D), dense grid operators on the L^2
// model, per-cell rank truncation, the maps alpha and beta, and the
// convergence tables built on them.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "roelab/cells.hpp"
#include "roelab/gram.hpp"

namespace roelab {

/// Max site distance over nonzero entries; 0 for diagonal matrices.
inline double propagation(const DeloneSet& sites, const Matrix& M)
{
    double p = 0.0;
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j)
            if (M(i, j) != 0.0)
                p = std::max(p, sites.space().dist(sites[static_cast<std::size_t>(i)],
                                                   sites[static_cast<std::size_t>(j)]));
    return p;
}

struct FinitePropOperator {
    DeloneSet sites;
    Matrix M;
    double prop = 0.0;

    FinitePropOperator(DeloneSet d, Matrix m) : sites(std::move(d)), M(std::move(m))
    {
        const auto n = static_cast<Eigen::Index>(sites.size());
        if (M.rows() != n || M.cols() != n) throw Error("operator size does not match its sites");
        prop = propagation(sites, M);
    }

    static FinitePropOperator identity(const DeloneSet& d)
    {
        const auto n = static_cast<Eigen::Index>(d.size());
        return FinitePropOperator(d, Matrix::Identity(n, n));
    }
    double norm() const { return operator_norm(M); }
    FinitePropOperator adjoint() const { return FinitePropOperator(sites, M.transpose()); }
};

/// Dense operator on grid functions. The weight is uniform, so the
/// quadrature adjoint is the transpose and the norm is the spectral norm.
struct GridOperator {
    TorusSpace space;
    Matrix M;

    static GridOperator identity(const TorusSpace& s)
    {
        const auto n = static_cast<Eigen::Index>(s.num_nodes());
        return {s, Matrix::Identity(n, n)};
    }
    static GridOperator zero(const TorusSpace& s)
    {
        const auto n = static_cast<Eigen::Index>(s.num_nodes());
        return {s, Matrix::Zero(n, n)};
    }
    static GridOperator multiplication(const GridFunction<double>& f)
    {
        return {f.space(), Matrix(f.values().asDiagonal())};
    }

    GridOperator adjoint() const { return {space, M.transpose()}; }
    double norm() const { return operator_norm(M); }
    bool is_self_adjoint(double tol = 1e-12) const { return is_symmetric(M, tol); }
    Vector apply(const Vector& f) const { return M * f; }
};

inline GridOperator operator*(const GridOperator& a, const GridOperator& b)
{
    if (!(a.space == b.space)) throw Error("space mismatch");
    return {a.space, a.M * b.M};
}

/// Smallest s among multiples of the grid step such that dropping every entry
/// between nodes farther apart than s moves the norm by less than eps.
inline double eps_propagation(const GridOperator& S, double eps)
{
    if (!(eps > 0.0)) throw Error("eps must be positive");
    const auto& space = S.space;
    const auto n = static_cast<Eigen::Index>(space.num_nodes());
    Matrix dist(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Point x = space.node(static_cast<std::size_t>(i));
        for (Eigen::Index j = 0; j < n; ++j) dist(i, j) = space.dist(x, space.node(static_cast<std::size_t>(j)));
    }
    const double far = dist.maxCoeff();
    for (int k = 0;; ++k) {
        const double s = k * space.step();
        if (s >= far) return s;
        const Matrix dropped = (dist.array() > s).select(S.M, 0.0);
        if (operator_norm(dropped) < eps) return s;
    }
}

/// Per-cell quadrature-orthonormal bases zeta_u and the rank cutoff m.
struct BlockRank {
    enum class Kind { ByDistance, Dirichlet, Adapted };

    Kind kind = Kind::ByDistance;
    std::size_t cutoff = 0;
    TorusSpace space;
    std::vector<std::vector<std::size_t>> cells;
    /// bases[u]: |V_u| x cutoff, rows follow cells[u].
    std::vector<Matrix> bases;

    /// Node indicators of V_u ordered by distance to u, index tie-break.
    static BlockRank by_distance(const CellPartition& C, std::size_t m);
    /// Lowest eigenmodes of the grid Laplacian on V_u with zero boundary values.
    static BlockRank dirichlet(const CellPartition& C, std::size_t m);
    /// Basis of span{phi_v^{D_n} : v < u} (nearest v first), completed by
    /// Dirichlet modes. For m <= m^n the range of P_m lies in H^{D_n}.
    static BlockRank adapted(const CellPartition& C, const PartitionOfUnity& Pn, std::size_t m);

    /// nodes x (sites * cutoff), the leading columns of every zeta_u.
    Matrix frame() const
    {
        const auto n = static_cast<Eigen::Index>(space.num_nodes());
        const auto k = static_cast<Eigen::Index>(cutoff);
        Matrix F = Matrix::Zero(n, k * static_cast<Eigen::Index>(cells.size()));
        for (std::size_t u = 0; u < cells.size(); ++u)
            for (std::size_t a = 0; a < cells[u].size(); ++a)
                F.block(static_cast<Eigen::Index>(cells[u][a]), static_cast<Eigen::Index>(u) * k, 1, k) =
                    bases[u].row(static_cast<Eigen::Index>(a));
        return F;
    }
    /// P_m as a dense grid matrix.
    Matrix projection() const
    {
        const Matrix F = frame();
        return space.weight() * (F * F.transpose());
    }
};

namespace detail {

inline void check_cutoff(const CellPartition& C, std::size_t m)
{
    if (m > C.min_cell_size()) throw Error("cutoff too large");
}

inline std::vector<std::size_t> by_distance_order(const CellPartition& C, std::size_t u)
{
    auto order = C.cells[u];
    const auto& space = C.space;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double da = space.dist(space.node(a), C.delone[u]);
        const double db = space.dist(space.node(b), C.delone[u]);
        return da < db || (da == db && a < b);
    });
    return order;
}

/// Dirichlet eigenmodes on one cell, ascending, quadrature-normalized,
/// sign fixed by a positive sum (or a positive first largest entry).
inline Matrix dirichlet_modes(const TorusSpace& space, const std::vector<std::size_t>& cell)
{
    const auto k = static_cast<Eigen::Index>(cell.size());
    std::vector<Eigen::Index> local(space.num_nodes(), -1);
    for (Eigen::Index a = 0; a < k; ++a) local[cell[static_cast<std::size_t>(a)]] = a;
    Matrix L = Matrix::Zero(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
        L(a, a) = 2.0 * space.dim();
        for (int axis = 0; axis < space.dim(); ++axis) {
            const auto b = local[space.forward_neighbor(cell[static_cast<std::size_t>(a)], axis)];
            if (b >= 0 && b != a) {
                L(a, b) -= 1.0;
                L(b, a) -= 1.0;
            }
        }
    }
    const SymmetricSpectrum spec(L);
    Matrix V = spec.vectors / std::sqrt(space.weight());
    for (Eigen::Index c = 0; c < k; ++c) {
        const double s = V.col(c).sum();
        double sign = s;
        if (std::fabs(s) < 1e-9 * std::sqrt(static_cast<double>(k))) {
            Eigen::Index at = 0;
            V.col(c).cwiseAbs().maxCoeff(&at);
            sign = V(at, c);
        }
        if (sign < 0.0) V.col(c) *= -1.0;
    }
    return V;
}

/// Appends v to the quadrature-orthonormal columns of Q[:, :count] if it has
/// a relative residual above 1e-8. Two Gram-Schmidt passes.
inline bool append_orthonormal(Matrix& Q, Eigen::Index& count, Vector v, double w)
{
    const double start = std::sqrt(w * v.squaredNorm());
    if (!(start > 0.0)) return false;
    for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index c = 0; c < count; ++c) v -= (w * Q.col(c).dot(v)) * Q.col(c);
    const double left = std::sqrt(w * v.squaredNorm());
    if (left < 1e-8 * start) return false;
    Q.col(count++) = v / left;
    return true;
}

} // namespace detail

inline BlockRank BlockRank::by_distance(const CellPartition& C, std::size_t m)
{
    detail::check_cutoff(C, m);
    BlockRank B{Kind::ByDistance, m, C.space, {}, {}};
    const double scale = 1.0 / std::sqrt(C.space.weight());
    for (std::size_t u = 0; u < C.cells.size(); ++u) {
        const auto order = detail::by_distance_order(C, u);
        B.cells.push_back(order);
        Matrix Z = Matrix::Zero(static_cast<Eigen::Index>(order.size()), static_cast<Eigen::Index>(m));
        for (std::size_t a = 0; a < m; ++a) Z(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) = scale;
        B.bases.push_back(std::move(Z));
    }
    return B;
}

inline BlockRank BlockRank::dirichlet(const CellPartition& C, std::size_t m)
{
    detail::check_cutoff(C, m);
    BlockRank B{Kind::Dirichlet, m, C.space, C.cells, {}};
    for (const auto& cell : C.cells)
        B.bases.push_back(detail::dirichlet_modes(C.space, cell).leftCols(static_cast<Eigen::Index>(m)));
    return B;
}

inline BlockRank BlockRank::adapted(const CellPartition& C, const PartitionOfUnity& Pn, std::size_t m)
{
    detail::check_cutoff(C, m);
    if (!(Pn.space == C.space)) throw Error("space mismatch");
    BlockRank B{Kind::Adapted, m, C.space, C.cells, {}};
    const auto members = fine_members(Pn, C);
    const double w = C.space.weight();
    for (std::size_t u = 0; u < C.cells.size(); ++u) {
        const auto& cell = C.cells[u];
        const auto k = static_cast<Eigen::Index>(cell.size());
        Matrix Q(k, static_cast<Eigen::Index>(m));
        Eigen::Index count = 0;

        auto near = members[u];
        std::stable_sort(near.begin(), near.end(), [&](std::size_t a, std::size_t b) {
            const double da = C.space.dist(Pn.delone[a], C.delone[u]);
            const double db = C.space.dist(Pn.delone[b], C.delone[u]);
            return da < db || (da == db && a < b);
        });
        for (auto v : near) {
            if (count == static_cast<Eigen::Index>(m)) break;
            Vector col(k);
            for (Eigen::Index a = 0; a < k; ++a)
                col[a] = Pn.phi(static_cast<Eigen::Index>(cell[static_cast<std::size_t>(a)]), static_cast<Eigen::Index>(v));
            detail::append_orthonormal(Q, count, std::move(col), w);
        }
        if (count < static_cast<Eigen::Index>(m)) {
            const Matrix modes = detail::dirichlet_modes(C.space, cell);
            for (Eigen::Index c = 0; c < modes.cols() && count < static_cast<Eigen::Index>(m); ++c)
                detail::append_orthonormal(Q, count, modes.col(c), w);
        }
        if (count < static_cast<Eigen::Index>(m)) throw Error("cutoff too large");
        B.bases.push_back(std::move(Q));
    }
    return B;
}

/// P_m S P_m with P_m the direct sum of the leading-m cell projections.
inline GridOperator truncate_k(const GridOperator& S, const BlockRank& B)
{
    if (!(S.space == B.space)) throw Error("space mismatch");
    const Matrix F = B.frame();
    const double w = S.space.weight();
    const Matrix core = w * (F.transpose() * S.M * F);
    return {S.space, w * (F * core * F.transpose())};
}

inline GridOperator alpha(const Isometry& I, const FinitePropOperator& T)
{
    if (T.sites.points() != I.delone.points()) throw Error("site mismatch");
    return {I.space, I.weight() * (I.U * T.M * I.U.transpose())};
}

inline FinitePropOperator beta(const Isometry& I, const GridOperator& S)
{
    if (!(S.space == I.space)) throw Error("space mismatch");
    return FinitePropOperator(I.delone, I.weight() * (I.U.transpose() * (S.M * I.U)));
}

/// Self-adjoint, entries uniform in [-1,1] for site pairs within `band`, unit norm.
inline Matrix random_banded_matrix(const TorusSpace& space, std::span<const Point> pts, double band,
                                   std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const auto n = static_cast<Eigen::Index>(pts.size());
    Matrix M = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j)
            if (space.dist(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]) <= band)
                M(i, j) = M(j, i) = uni(rng);
    const double nrm = operator_norm(M);
    if (nrm > 0.0) M /= nrm;
    return M;
}

inline FinitePropOperator random_banded(const DeloneSet& D, double band, std::mt19937_64& rng)
{
    return FinitePropOperator(D, random_banded_matrix(D.space(), D.points(), band, rng));
}

inline GridOperator random_banded(const TorusSpace& space, double band, std::mt19937_64& rng)
{
    const auto nodes = space.nodes();
    return {space, random_banded_matrix(space, nodes, band, rng)};
}

struct DefectRow {
    std::size_t n = 0;
    double R_cover = 0.0;
    std::size_t m_n = 0;
    double value = 0.0;
};

struct DefectTable {
    std::vector<DefectRow> rows;
    /// value < 1e-6 wherever m^n > cutoff.
    bool exact_ok = true;
    /// Non-increasing over the rows with m^n <= cutoff.
    bool decreasing_before = true;
};

namespace detail {

inline void finish_defect_table(DefectTable& t, std::size_t cutoff)
{
    const DefectRow* prev = nullptr;
    for (const auto& row : t.rows) {
        if (row.m_n > cutoff) {
            if (!(row.value < 1e-6)) t.exact_ok = false;
        } else {
            if (prev && row.value > prev->value + 1e-12) t.decreasing_before = false;
            prev = &row;
        }
    }
}

inline double reconstruction_defect(const Isometry& I, const GridOperator& T)
{
    return operator_norm(alpha(I, beta(I, T)).M - T.M);
}

} // namespace detail

/// ||alpha beta(T) - T|| along a schedule for one fixed T.
inline DefectTable alpha_beta_defect(std::span<const Stage> seq, const GridOperator& T, const CellPartition& C,
                                     std::size_t cutoff)
{
    DefectTable t;
    for (std::size_t n = 0; n < seq.size(); ++n)
        t.rows.push_back({n + 1, seq[n].delone.R_cover(), cell_dims(seq[n].pou, C).m_min,
                          detail::reconstruction_defect(seq[n].iso, T)});
    detail::finish_defect_table(t, cutoff);
    return t;
}

/// Same, with T_n = P_m S P_m for the basis adapted to D_n at each step.
inline DefectTable alpha_beta_defect_adapted(std::span<const Stage> seq, const GridOperator& S,
                                             const CellPartition& C, std::size_t cutoff)
{
    DefectTable t;
    for (std::size_t n = 0; n < seq.size(); ++n) {
        const auto Tn = truncate_k(S, BlockRank::adapted(C, seq[n].pou, cutoff));
        t.rows.push_back({n + 1, seq[n].delone.R_cover(), cell_dims(seq[n].pou, C).m_min,
                          detail::reconstruction_defect(seq[n].iso, Tn)});
    }
    detail::finish_defect_table(t, cutoff);
    return t;
}

struct ValueRow {
    std::size_t n = 0;
    double R_cover = 0.0;
    double value = 0.0;
};

/// ||beta(RS) - beta(R) beta(S)|| per step.
inline std::vector<ValueRow> multiplicativity_defect(std::span<const Stage> seq, const GridOperator& R,
                                                     const GridOperator& S)
{
    const auto RS = R * S;
    std::vector<ValueRow> rows;
    for (std::size_t n = 0; n < seq.size(); ++n) {
        const auto& I = seq[n].iso;
        const Matrix d = beta(I, RS).M - beta(I, R).M * beta(I, S).M;
        rows.push_back({n + 1, seq[n].delone.R_cover(), operator_norm(d)});
    }
    return rows;
}

struct NormRow {
    std::size_t n = 0;
    double R_cover = 0.0;
    double beta_norm = 0.0;
    /// ||P_D S P_D|| from the dense projection, an independent route.
    double compressed_norm = 0.0;
    double gap = 0.0;
};

struct NormConvergence {
    std::vector<NormRow> rows;
    double source_norm = 0.0;
    bool identity_ok = true;
    double final_gap = 0.0;
};

inline NormConvergence norm_convergence(std::span<const Stage> seq, const GridOperator& S)
{
    NormConvergence out;
    out.source_norm = S.norm();
    for (std::size_t n = 0; n < seq.size(); ++n) {
        const auto& I = seq[n].iso;
        NormRow row;
        row.n = n + 1;
        row.R_cover = seq[n].delone.R_cover();
        row.beta_norm = beta(I, S).norm();
        const Matrix P = I.projection();
        Matrix PSP = P * (S.M * P);
        if (S.is_self_adjoint()) PSP = 0.5 * (PSP + PSP.transpose());
        row.compressed_norm = operator_norm(PSP);
        row.gap = std::fabs(row.beta_norm - out.source_norm);
        if (std::fabs(row.beta_norm - row.compressed_norm) > 1e-8) out.identity_ok = false;
        out.rows.push_back(row);
    }
    if (!out.rows.empty()) out.final_gap = out.rows.back().gap;
    return out;
}

} // namespace roelab
