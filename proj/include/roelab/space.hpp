#pragma once

// Ground space: a flat torus of dimension 1 or 2 with a uniform quadrature
// grid. The grid is the L^2 model; the metric is the continuum torus metric.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace roelab {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kMaxDim = 2;

/// A point of the torus. Coordinates past dim() are ignored and kept at 0.
using Point = std::array<double, kMaxDim>;

class TorusSpace {
public:
    TorusSpace(int dim, double side, int grid_n, Point basepoint = {})
        : dim_(dim), side_(side), grid_n_(grid_n)
    {
        if (dim < 1 || dim > kMaxDim)
            throw Error("torus dimension must be 1 or 2, got " + std::to_string(dim));
        if (!(side > 0.0) || !std::isfinite(side))
            throw Error("torus side must be a positive finite length");
        if (grid_n < 2)
            throw Error("grid needs at least 2 nodes per axis");
        step_ = side_ / grid_n_;
        weight_ = std::pow(step_, dim_);
        num_nodes_ = 1;
        for (int a = 0; a < dim_; ++a) num_nodes_ *= static_cast<std::size_t>(grid_n_);
        basepoint_ = reduce(basepoint);
    }

    int dim() const { return dim_; }
    double side() const { return side_; }
    int grid_n() const { return grid_n_; }
    std::size_t num_nodes() const { return num_nodes_; }
    double step() const { return step_; }
    /// Quadrature weight of one node, (L/N)^d.
    double weight() const { return weight_; }
    /// Total measure L^d.
    double measure() const { return std::pow(side_, dim_); }
    double diameter() const { return side_ * std::sqrt(static_cast<double>(dim_)) / 2.0; }
    /// Half a grid cell diagonal: the gap between grid-sampled and true covering radii.
    double half_cell_diagonal() const { return step_ * std::sqrt(static_cast<double>(dim_)) / 2.0; }
    const Point& basepoint() const { return basepoint_; }

    Point reduce(Point p) const
    {
        for (int a = 0; a < kMaxDim; ++a) {
            if (a >= dim_) {
                p[a] = 0.0;
                continue;
            }
            double v = std::fmod(p[a], side_);
            if (v < 0.0) v += side_;
            if (v >= side_) v = 0.0;
            p[a] = v;
        }
        return p;
    }

    /// Node coordinates; axis 0 varies fastest.
    Point node(std::size_t i) const
    {
        Point p{};
        for (int a = 0; a < dim_; ++a) {
            p[a] = static_cast<double>(i % grid_n_) * step_;
            i /= grid_n_;
        }
        return p;
    }

    std::vector<Point> nodes() const
    {
        std::vector<Point> out(num_nodes_);
        for (std::size_t i = 0; i < num_nodes_; ++i) out[i] = node(i);
        return out;
    }

    /// Index of the node nearest to p (per-axis rounding).
    std::size_t nearest_node(const Point& p) const
    {
        const Point q = reduce(p);
        std::size_t idx = 0;
        std::size_t stride = 1;
        for (int a = 0; a < dim_; ++a) {
            auto k = static_cast<long>(std::llround(q[a] / step_)) % grid_n_;
            idx += static_cast<std::size_t>(k) * stride;
            stride *= grid_n_;
        }
        return idx;
    }

    /// Neighbor of node i one step forward along axis (wrapping).
    std::size_t forward_neighbor(std::size_t i, int axis) const
    {
        std::size_t stride = 1;
        for (int a = 0; a < axis; ++a) stride *= grid_n_;
        const std::size_t coord = (i / stride) % grid_n_;
        return coord + 1 == static_cast<std::size_t>(grid_n_) ? i - coord * stride : i + stride;
    }

    /// Signed per-axis displacement y - x wrapped into [-L/2, L/2).
    Point displacement(const Point& x, const Point& y) const
    {
        Point d{};
        for (int a = 0; a < dim_; ++a) {
            double v = std::fmod(y[a] - x[a], side_);
            if (v >= side_ / 2) v -= side_;
            else if (v < -side_ / 2) v += side_;
            d[a] = v;
        }
        return d;
    }

    double dist(const Point& x, const Point& y) const
    {
        double s = 0.0;
        for (int a = 0; a < dim_; ++a) {
            double v = std::fabs(std::fmod(x[a] - y[a], side_));
            v = std::min(v, side_ - v);
            if (dim_ == 1) return v;
            s += v * v;
        }
        return std::sqrt(s);
    }

    friend bool operator==(const TorusSpace& a, const TorusSpace& b)
    {
        return a.dim_ == b.dim_ && a.side_ == b.side_ && a.grid_n_ == b.grid_n_ &&
               a.basepoint_ == b.basepoint_;
    }

private:
    int dim_;
    double side_;
    int grid_n_;
    double step_ = 0.0;
    double weight_ = 0.0;
    std::size_t num_nodes_ = 0;
    Point basepoint_{};
};

inline double dist(const TorusSpace& space, const Point& x, const Point& y)
{
    return space.dist(x, y);
}

/// Distance from x to the nearest point of a set; +inf for an empty set.
inline double dist_to_set(const TorusSpace& space, const Point& x, std::span<const Point> set)
{
    double best = std::numeric_limits<double>::infinity();
    for (const auto& y : set) best = std::min(best, space.dist(x, y));
    return best;
}

/// Quadrature measure of the open ball B_R(x).
inline double ball_measure(const TorusSpace& space, const Point& x, double R)
{
    std::size_t count = 0;
    for (std::size_t i = 0; i < space.num_nodes(); ++i)
        if (space.dist(x, space.node(i)) < R) ++count;
    return space.weight() * static_cast<double>(count);
}

struct BoundedGeometry {
    double c = 0.0;
    double C = 0.0;
};

/// Smallest and largest ball measure over the sample. Both are positive for
/// R > 0 because every ball contains its center node's neighbourhood.
inline BoundedGeometry check_bounded_geometry(const TorusSpace& space, double R,
                                              std::span<const Point> sample)
{
    if (!(R > 0.0)) throw Error("bounded geometry check needs R > 0");
    if (sample.empty()) throw Error("bounded geometry check needs a nonempty sample");
    BoundedGeometry out{std::numeric_limits<double>::infinity(), 0.0};
    for (const auto& x : sample) {
        const double m = ball_measure(space, x, R);
        out.c = std::min(out.c, m);
        out.C = std::max(out.C, m);
    }
    return out;
}

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Sampled function on the grid nodes, an element of the L^2 model.
template <typename Scalar = double>
class GridFunction {
public:
    static_assert(std::is_same_v<Scalar, double> || std::is_same_v<Scalar, std::complex<double>>,
                  "grid functions are real or complex");

    GridFunction(TorusSpace space, Vec<Scalar> values)
        : space_(std::move(space)), values_(std::move(values))
    {
        if (static_cast<std::size_t>(values_.size()) != space_.num_nodes())
            throw Error("grid function has " + std::to_string(values_.size()) +
                        " values, expected " + std::to_string(space_.num_nodes()));
    }

    template <typename F>
    static GridFunction sample(const TorusSpace& space, F&& f)
    {
        Vec<Scalar> v(static_cast<Eigen::Index>(space.num_nodes()));
        for (std::size_t i = 0; i < space.num_nodes(); ++i)
            v[static_cast<Eigen::Index>(i)] = static_cast<Scalar>(f(space.node(i)));
        return GridFunction(space, std::move(v));
    }

    static GridFunction constant(const TorusSpace& space, Scalar c)
    {
        return GridFunction(space, Vec<Scalar>::Constant(static_cast<Eigen::Index>(space.num_nodes()), c));
    }

    const TorusSpace& space() const { return space_; }
    const Vec<Scalar>& values() const { return values_; }
    Scalar operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

    double norm() const { return std::sqrt(space_.weight() * values_.squaredNorm()); }

private:
    TorusSpace space_;
    Vec<Scalar> values_;
};

/// Quadrature inner product, conjugate-linear in the first argument.
template <typename Scalar>
Scalar inner(const GridFunction<Scalar>& f, const GridFunction<Scalar>& g)
{
    if (!(f.space() == g.space())) throw Error("inner product of functions on different spaces");
    // Eigen's dot() conjugates its left operand.
    return f.space().weight() * f.values().dot(g.values());
}

} // namespace roelab
