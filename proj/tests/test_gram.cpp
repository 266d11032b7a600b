#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "roelab/gram.hpp"

using namespace roelab;
using Catch::Approx;

namespace {

std::vector<Point> pts(std::initializer_list<double> xs)
{
    std::vector<Point> out;
    for (double x : xs) out.push_back({x, 0.0});
    return out;
}

/// phi from the complement scan, normalized row by row.
Matrix scan_phi(const DeloneSet& D, int N, int refine)
{
    const double r = D.r_pack(), R = cover_radius_used(D);
    const std::vector<oracle::P> sites(D.points().begin(), D.points().end());
    const auto nodes = oracle::grid(1, 1.0, N);
    Matrix phi(N, static_cast<Eigen::Index>(D.size()));
    for (int i = 0; i < N; ++i) {
        for (std::size_t u = 0; u < D.size(); ++u)
            phi(i, static_cast<Eigen::Index>(u)) = std::max(0.0, oracle::h_scan(1, 1.0, refine * N, sites, u, nodes[i], r, R));
        phi.row(i) /= phi.row(i).sum();
    }
    return phi;
}

} // namespace

TEST_CASE("Gram matrix of one and two sites", "[gram]")
{
    const TorusSpace X(1, 1.0, 1024);
    const auto one = make_stage(DeloneSet(X, pts({0.2})));
    CHECK(one.gram.G(0, 0) == Approx(1.0));
    CHECK((one.iso.U.array() - 1.0).abs().maxCoeff() < 1e-12);

    const auto two = make_stage(DeloneSet(X, pts({0, 0.5})));
    const auto& G = two.gram.G;
    const double a = G(0, 0), b = G(0, 1);
    CHECK(G(1, 1) == Approx(a));
    CHECK(G(1, 0) == b);
    CHECK(a > b);
    CHECK(b > 0.0);
    CHECK(a - b >= ball_measure(X, {0, 0}, two.pou.r / 6) - 1e-12);

    // Quadrature oracle for the entries.
    double aa = 0.0, bb = 0.0;
    for (Eigen::Index i = 0; i < 1024; ++i) {
        aa += X.weight() * two.pou.phi(i, 0) * two.pou.phi(i, 0);
        bb += X.weight() * two.pou.phi(i, 0) * two.pou.phi(i, 1);
    }
    CHECK(a == Approx(aa).epsilon(1e-13));
    CHECK(b == Approx(bb).epsilon(1e-13));
}

TEST_CASE("Gram matrix from the scanned partition agrees", "[gram][oracle]")
{
    const int N = 48;
    const TorusSpace X(1, 1.0, N);
    for (double target : {0.3, 0.15, 0.08}) {
        const auto D = greedy_delone(X, target, {0.125, 0});
        const Matrix phi = scan_phi(D, N, 6);
        const Matrix Gref = X.weight() * phi.transpose() * phi;
        CHECK(max_abs(gram(build_pou(D)).G - Gref) < 1e-9);
    }
}

TEST_CASE("spectral square roots", "[gram][property]")
{
    for (int dim : {1, 2}) {
        const TorusSpace X(dim, 1.0, dim == 1 ? 256 : 20);
        for (double target : {0.3, 0.12}) {
            const auto g = gram(build_pou(greedy_delone(X, target, {0, 0})));
            const auto k = g.G.rows();
            CHECK(is_symmetric(g.G, 1e-12));
            CHECK(g.lambda_min > 0.0);
            CHECK(max_abs(g.G_half * g.G_half - g.G) < 1e-9);
            CHECK(max_abs(g.G_invhalf * g.G_half - Matrix::Identity(k, k)) < 1e-9);
            const SymmetricSpectrum half(g.G_half);
            for (Eigen::Index i = 0; i < k; ++i) CHECK(half.values[i] == Approx(std::sqrt(g.eigvals[i])).epsilon(1e-10));
        }
    }
}

TEST_CASE("Gram spectrum bounds", "[gram][property]")
{
    for (int dim : {1, 2}) {
        const TorusSpace X(dim, 1.0, dim == 1 ? 512 : 24);
        for (double target : {0.5, 0.25, 0.12, 0.06}) {
            const auto P = build_pou(greedy_delone(X, target, {0, 0}));
            const auto g = gram(P);
            CHECK(g.lambda_min >= gram_lower_bound(P) - 1e-9);
            CHECK(g.lambda_max <= gram_upper_bound(g) + 1e-9);
            CHECK(operator_norm(g.G) == Approx(oracle::power_norm(g.G)).epsilon(1e-6));
        }
    }
}

TEST_CASE("near-singular Gram matrices are rejected", "[gram]")
{
    const TorusSpace X(1, 1.0, 16);
    auto P = build_pou(DeloneSet(X, pts({0, 0.5})));
    P.phi.col(1) = P.phi.col(0);
    CHECK_THROWS_WITH(gram(P), Catch::Matchers::ContainsSubstring("near-singular"));
}

TEST_CASE("isometry and projection", "[gram][property]")
{
    for (int dim : {1, 2}) {
        const TorusSpace X(dim, 1.0, dim == 1 ? 256 : 16);
        for (double target : {0.3, 0.1}) {
            const auto st = make_stage(greedy_delone(X, target, {0.5, 0}));
            CHECK(st.iso.orthonormality_defect() < 1e-8);
            const Matrix P = st.iso.projection();
            CHECK(max_abs(P * P - P) < 1e-8);
            CHECK(max_abs(P - P.transpose()) < 1e-12);
            CHECK(max_abs(P * st.pou.phi - st.pou.phi) < 1e-8);
            CHECK(max_abs(P - oracle::qr_projection(st.pou.phi)) < 1e-9);
        }
    }

    const TorusSpace Y(1, 1.0, 32);
    const auto full = make_stage(DeloneSet(Y, Y.nodes()));
    CHECK(max_abs(full.iso.projection() - Matrix::Identity(32, 32)) < 1e-12);
}

TEST_CASE("projecting functions", "[gram]")
{
    const TorusSpace X(1, 1.0, 128);
    const auto c = GridFunction<double>::sample(X, [](const Point& p) { return std::cos(2 * M_PI * p[0]); });
    const auto one = make_stage(DeloneSet(X, pts({0})));
    CHECK(project(one.iso, c).values().cwiseAbs().maxCoeff() < 1e-14);
    const auto lin = GridFunction<double>::sample(X, [](const Point& p) { return p[0]; });
    CHECK((project(one.iso, lin).values().array() - lin.values().mean()).abs().maxCoeff() < 1e-14);

    const auto st = make_stage(greedy_delone(X, 0.1, {0, 0}));
    const GridFunction<double> inside(X, st.pou.phi * Vector::LinSpaced(st.pou.phi.cols(), -1.0, 2.0));
    CHECK((project(st.iso, inside).values() - inside.values()).cwiseAbs().maxCoeff() < 1e-8);

    std::mt19937_64 rng(2);
    std::normal_distribution<double> n01;
    for (int k = 0; k < 10; ++k) {
        Vector v(128);
        for (auto& e : v) e = n01(rng);
        const GridFunction<double> f(X, v);
        const auto pf = project(st.iso, f);
        CHECK(pf.norm() <= f.norm() + 1e-12);
        CHECK((project(st.iso, pf).values() - pf.values()).cwiseAbs().maxCoeff() < 1e-10);
    }

    using C = std::complex<double>;
    const auto e = GridFunction<C>::sample(X, [](const Point& p) { return std::exp(C(0, 2 * M_PI * p[0])); });
    const auto pe = project(st.iso, e);
    const auto pre = project(st.iso, c);
    CHECK((pe.values().real() - pre.values()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("strong convergence of projections", "[gram]")
{
    const TorusSpace X(1, 1.0, 1024);
    std::vector<double> targets;
    for (int n = 1; n <= 6; ++n) targets.push_back(std::ldexp(1.0, -n));
    const auto seq = build_schedule(X, targets, {1.0 / 16, 0});

    const auto f = GridFunction<double>::sample(X, [](const Point& p) { return std::cos(2 * M_PI * p[0]); });
    const auto sc = strong_convergence(f, std::span<const Stage>(seq));
    CHECK(sc.strictly_decreasing);

    // From seed 0 the two sites of D_2 sit on the extrema of f, and the error
    // at n = 2 drops below the one at n = 3.
    const auto aligned = strong_convergence(f, std::span<const Stage>(build_schedule(X, targets, {0, 0})));
    CHECK(aligned.rows[1].error < 0.05);
    CHECK(aligned.rows[2].error > 0.15);
    CHECK(!aligned.strictly_decreasing);
    CHECK(aligned.bound_ok);
    CHECK(sc.schedule_decreasing);
    CHECK(sc.bound_ok);
    CHECK(sc.final_error < 0.05 * f.norm());

    const auto k = GridFunction<double>::constant(X, 3.0);
    for (const auto& r : strong_convergence(k, std::span<const Stage>(seq)).rows) CHECK(r.error < 1e-12);

    // A bump inside one plateau: the library projection agrees with a dense QR projection.
    const auto& st = seq[3];
    const double rad = st.pou.r / 6;
    const auto bump = GridFunction<double>::sample(X, [&](const Point& p) {
        const double d = X.dist(p, st.delone[1]);
        return d < rad ? 1.0 - d / rad : 0.0;
    });
    const Vector ref = oracle::qr_projection(st.pou.phi) * bump.values();
    const double err = (bump.values() - project(st.iso, bump).values()).norm();
    CHECK(err == Approx((bump.values() - ref).norm()).epsilon(1e-9));
}

TEST_CASE("modulus of continuity", "[gram]")
{
    const TorusSpace X(1, 1.0, 8);
    const auto lin = GridFunction<double>::sample(X, [](const Point& p) { return p[0]; });
    CHECK(modulus_of_continuity(lin, 0.1) == 0.0);
    CHECK(modulus_of_continuity(lin, 0.2) == Approx(0.875)); // wrap pair 0.875 -> 0
}
