#pragma once

// Dense spectral helpers shared by the Gram, Roe and field modules.

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "roelab/space.hpp"

namespace roelab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline double max_abs(const Matrix& m)
{
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool is_symmetric(const Matrix& m, double tol = 0.0)
{
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, max_abs(m));
    return max_abs(m - m.transpose()) <= tol * scale;
}

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
struct SymmetricSpectrum {
    Vector values;
    Matrix vectors;

    explicit SymmetricSpectrum(const Matrix& sym)
    {
        Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
        if (solver.info() != Eigen::Success) throw Error("symmetric eigensolver failed");
        values = solver.eigenvalues();
        vectors = solver.eigenvectors();
    }

    /// V diag(lambda^p) V^T. Requires positive eigenvalues when p is not an integer.
    Matrix power(double p) const
    {
        Vector d = values.unaryExpr([p](double l) { return std::pow(l, p); });
        return vectors * d.asDiagonal() * vectors.transpose();
    }
};

/// Spectral norm (largest singular value) by dense symmetric eigensolves.
/// Symmetric inputs use max |eigenvalue|; others use the smaller of A^T A, A A^T.
inline double operator_norm(const Matrix& m)
{
    if (m.size() == 0) return 0.0;
    if (m.rows() == m.cols() && is_symmetric(m, 1e-14)) {
        Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
        if (solver.info() != Eigen::Success) throw Error("symmetric eigensolver failed");
        const auto& ev = solver.eigenvalues();
        return std::max(std::fabs(ev[0]), std::fabs(ev[ev.size() - 1]));
    }
    const Matrix gram = m.rows() <= m.cols() ? Matrix(m * m.transpose()) : Matrix(m.transpose() * m);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(gram, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw Error("symmetric eigensolver failed");
    return std::sqrt(std::max(0.0, solver.eigenvalues().maxCoeff()));
}

} // namespace roelab
