#pragma once

// Independent reference computations. Nothing here calls the library's
// geometry or linear algebra beyond plain data types.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using P = std::array<double, 2>;

/// Torus distance from its definition.
inline double tdist(int dim, double L, const P& a, const P& b)
{
    double s = 0.0;
    for (int k = 0; k < dim; ++k) {
        double d = std::fmod(std::fabs(a[k] - b[k]), L);
        d = std::min(d, L - d);
        s += d * d;
    }
    return std::sqrt(s);
}

/// All grid nodes by nested coordinate loops, axis 0 fastest.
inline std::vector<P> grid(int dim, double L, int N)
{
    std::vector<P> out;
    const double h = L / N;
    if (dim == 1)
        for (int i = 0; i < N; ++i) out.push_back({i * h, 0.0});
    else
        for (int j = 0; j < N; ++j)
            for (int i = 0; i < N; ++i) out.push_back({i * h, j * h});
    return out;
}

/// weight x #{nodes y : d(x,y) < R}.
inline double ball_measure(int dim, double L, int N, const P& x, double R)
{
    std::size_t c = 0;
    for (const auto& y : grid(dim, L, N))
        if (tdist(dim, L, x, y) < R) ++c;
    return static_cast<double>(c) * std::pow(L / N, dim);
}

inline double dist_to(int dim, double L, const P& x, const std::vector<P>& set)
{
    double d = std::numeric_limits<double>::infinity();
    for (const auto& y : set) d = std::min(d, tdist(dim, L, x, y));
    return d;
}

/// rho by scanning eps = k * delta upward: the first eps at which every point
/// of either set inside the open ball B_{1/eps}(x0) is within eps of the other.
/// Overestimates the true value by less than delta.
inline double rho_scan(int dim, double L, const P& x0, const std::vector<P>& A, const std::vector<P>& B,
                       double delta)
{
    auto ok = [&](double eps, const std::vector<P>& from, const std::vector<P>& to) {
        for (const auto& x : from)
            if (tdist(dim, L, x, x0) < 1.0 / eps && dist_to(dim, L, x, to) > eps) return false;
        return true;
    };
    for (double eps = delta; eps < 1.0; eps += delta)
        if (ok(eps, A, B) && ok(eps, B, A)) return eps;
    return 1.0;
}

/// h_u(x) = d(x, X \ W_u) by scanning a refined grid for points outside
/// W_u = B_{2R}(u) minus closed B_{r/6}(v), v != u.
inline double h_scan(int dim, double L, int fineN, const std::vector<P>& sites, std::size_t u, const P& x,
                     double r, double R)
{
    double best = std::numeric_limits<double>::infinity();
    for (const auto& y : grid(dim, L, fineN)) {
        // Boundary nodes are compared with a small slack so that rounding in
        // the distance does not move a closed-ball boundary node outside.
        const double slack = 1e-12;
        bool outside = !(tdist(dim, L, y, sites[u]) < 2 * R - slack);
        for (std::size_t v = 0; v < sites.size() && !outside; ++v)
            if (v != u && tdist(dim, L, y, sites[v]) <= r / 6 + slack) outside = true;
        if (outside) best = std::min(best, tdist(dim, L, x, y));
    }
    return best;
}

/// Orthogonal projection onto the column span via Householder QR.
inline Eigen::MatrixXd qr_projection(const Eigen::MatrixXd& frame)
{
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(frame);
    const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(frame.rows(), frame.cols());
    return Q * Q.transpose();
}

/// Largest singular value by power iteration on M^T M.
inline double power_norm(const Eigen::MatrixXd& M, int iters = 5000)
{
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(M.cols(), 1.0, 2.0);
    v.normalize();
    double lambda = 0.0;
    for (int k = 0; k < iters; ++k) {
        Eigen::VectorXd w = M.transpose() * (M * v);
        const double nw = w.norm();
        if (nw == 0.0) return 0.0;
        const double next = nw;
        v = w / nw;
        if (std::fabs(next - lambda) <= 1e-15 * next) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return std::sqrt(lambda);
}

/// Farthest-point sampling written out directly on the node list.
inline std::vector<P> fps(int dim, double L, int N, const P& seed, double target)
{
    const auto nodes = grid(dim, L, N);
    std::vector<P> out{seed};
    for (;;) {
        double far = -1.0;
        std::size_t at = 0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const double d = dist_to(dim, L, nodes[i], out);
            if (d > far) {
                far = d;
                at = i;
            }
        }
        if (far <= target) return out;
        out.push_back(nodes[at]);
    }
}

} // namespace oracle
