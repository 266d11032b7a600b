#include <catch_amalgamated.hpp>

#include <complex>
#include <random>

#include "oracles.hpp"
#include "roelab/space.hpp"

using namespace roelab;
using Catch::Approx;

TEST_CASE("torus distance wraps around", "[space]")
{
    const TorusSpace X(1, 1.0, 8);
    CHECK(X.dist({0.125, 0}, {0.875, 0}) == Approx(0.25).margin(1e-15));
    CHECK(X.dist({0.3, 0}, {0.3, 0}) == 0.0);
    CHECK(X.dist({0.0, 0}, {0.5, 0}) == Approx(0.5).margin(1e-15));
    CHECK(X.diameter() == 0.5);

    const TorusSpace Y(2, 2.0, 16);
    CHECK(Y.diameter() == Approx(std::sqrt(2.0)));
    CHECK(Y.dist({0.1, 1.9}, {1.9, 0.1}) == Approx(std::hypot(0.2, 0.2)));
}

TEST_CASE("distance matches the definition and satisfies the triangle inequality", "[space][property]")
{
    for (int dim : {1, 2}) {
        const int N = dim == 1 ? 64 : 8;
        const TorusSpace X(dim, 1.5, N);
        const auto nodes = X.nodes();
        const auto ref = oracle::grid(dim, 1.5, N);
        REQUIRE(nodes.size() == ref.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            CHECK(nodes[i][0] == Approx(ref[i][0]));
            CHECK(nodes[i][1] == Approx(ref[i][1]));
        }
        for (const auto& a : nodes)
            for (const auto& b : nodes) {
                const double d = X.dist(a, b);
                CHECK(d == Approx(oracle::tdist(dim, 1.5, a, b)).margin(1e-14));
                CHECK(d == X.dist(b, a));
            }
        // Exhaustive triangle check on all triples.
        bool ok = true;
        for (const auto& a : nodes)
            for (const auto& b : nodes)
                for (const auto& c : nodes)
                    if (X.dist(a, c) > X.dist(a, b) + X.dist(b, c) + 1e-14) ok = false;
        CHECK(ok);
    }
}

TEST_CASE("grid nodes lie in [0, L) and weights sum to L^d", "[space]")
{
    for (int dim : {1, 2}) {
        const TorusSpace X(dim, 3.0, 12);
        double total = 0.0;
        for (std::size_t i = 0; i < X.num_nodes(); ++i) {
            total += X.weight();
            const auto p = X.node(i);
            for (int a = 0; a < dim; ++a) {
                CHECK(p[a] >= 0.0);
                CHECK(p[a] < 3.0);
            }
            CHECK(X.nearest_node(p) == i);
        }
        CHECK(total == Approx(std::pow(3.0, dim)).epsilon(1e-14));
    }
}

TEST_CASE("invalid spaces are rejected", "[space]")
{
    CHECK_THROWS_AS(TorusSpace(3, 1.0, 8), Error);
    CHECK_THROWS_AS(TorusSpace(1, 0.0, 8), Error);
    CHECK_THROWS_AS(TorusSpace(1, 1.0, 1), Error);
}

TEST_CASE("ball measure counts nodes in the open ball", "[space]")
{
    const TorusSpace X(1, 1.0, 8);
    CHECK(ball_measure(X, {0, 0}, 0.3) == Approx(0.625));
    CHECK(ball_measure(X, {0, 0}, 0.3) == Approx(oracle::ball_measure(1, 1.0, 8, {0, 0}, 0.3)));
    CHECK(ball_measure(X, {0, 0}, 0.0) == 0.0);
    CHECK(ball_measure(X, {0, 0}, 0.25) == Approx(0.375)); // open: 0.25 excluded
    CHECK(ball_measure(X, {0.3, 0}, 1.0) == Approx(1.0));

    const TorusSpace Y(2, 1.0, 10);
    CHECK(ball_measure(Y, {0.2, 0.7}, std::sqrt(2.0)) == Approx(1.0));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 20; ++k) {
        const Point x{u(rng), u(rng)};
        const double R = 0.7 * u(rng);
        CHECK(ball_measure(Y, x, R) == Approx(oracle::ball_measure(2, 1.0, 10, x, R)).margin(1e-15));
    }
}

TEST_CASE("ball measure is monotone and translation invariant", "[space][property]")
{
    const TorusSpace X(2, 1.0, 16);
    const auto nodes = X.nodes();
    for (double R : {0.05, 0.13, 0.31, 0.5}) {
        const double ref = ball_measure(X, nodes[0], R);
        for (std::size_t i = 0; i < nodes.size(); i += 7) CHECK(ball_measure(X, nodes[i], R) == ref);
    }
    double prev = 0.0;
    for (double R = 0.0; R < 0.8; R += 0.01) {
        const double m = ball_measure(X, {0.33, 0.71}, R);
        CHECK(m >= prev);
        prev = m;
    }
}

TEST_CASE("bounded geometry constants", "[space]")
{
    const TorusSpace X(1, 1.0, 8);
    const auto nodes = X.nodes();
    auto g = check_bounded_geometry(X, 0.3, nodes);
    CHECK(g.c == Approx(0.625));
    CHECK(g.C == Approx(0.625));
    g = check_bounded_geometry(X, 0.6, nodes);
    CHECK(g.c == Approx(1.0));
    CHECK(g.C == Approx(1.0));
    CHECK_THROWS_AS(check_bounded_geometry(X, 0.0, nodes), Error);
}

TEST_CASE("quadrature inner product", "[space]")
{
    const TorusSpace X(1, 2.0, 32);
    const auto one = GridFunction<double>::constant(X, 1.0);
    CHECK(inner(one, one) == Approx(2.0));
    const auto c = GridFunction<double>::sample(X, [](const Point& p) { return std::cos(M_PI * p[0]); });
    CHECK(inner(c, one) == Approx(0.0).margin(1e-14));
    CHECK(inner(c, c) > 0.0);
    CHECK(inner(GridFunction<double>::constant(X, 0.0), GridFunction<double>::constant(X, 0.0)) == 0.0);

    using C = std::complex<double>;
    const auto f = GridFunction<C>::sample(X, [](const Point& p) { return C(p[0], 1.0); });
    const auto g = GridFunction<C>::constant(X, C(0.0, 1.0));
    // conjugate-linear in the first slot
    const C a(0.0, 2.0);
    const GridFunction<C> af(X, a * f.values());
    CHECK(std::abs(inner(af, g) - std::conj(a) * inner(f, g)) < 1e-12);
    CHECK(std::abs(inner(f, f).imag()) < 1e-14);
    CHECK(inner(f, f).real() == Approx(f.norm() * f.norm()));

    const TorusSpace Y(1, 2.0, 16);
    CHECK_THROWS_AS(inner(one, GridFunction<double>::constant(Y, 1.0)), Error);
}
