#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "roelab/chabauty.hpp"

using namespace roelab;
using Catch::Approx;

namespace {

std::vector<Point> pts(std::initializer_list<double> xs)
{
    std::vector<Point> out;
    for (double x : xs) out.push_back({x, 0.0});
    return out;
}

std::vector<oracle::P> as_oracle(const std::vector<Point>& p) { return {p.begin(), p.end()}; }

} // namespace

TEST_CASE("rho examples", "[chabauty]")
{
    const TorusSpace X(1, 1.0, 8);
    const auto D = pts({0, 0.5});
    CHECK(rho(X, D, D).value == 0.0);
    CHECK(rho(X, pts({0}), D).value == 0.5);
    CHECK(rho(X, D, X.nodes()).value == 0.25);
    CHECK(rho(X, D, X.nodes()).value == DeloneSet(X, D).R_cover());
    CHECK_THROWS_AS(rho(X, {}, D), Error);

    // The witness reproduces the value.
    const auto one = pts({0.125});
    const auto r = rho(X, one, D);
    const auto& to = r.direction == RhoResult::Direction::FirstToSecond ? D : one;
    const double c = std::min(dist_to_set(X, r.witness, to), 1.0 / X.dist(r.witness, X.basepoint()));
    CHECK(c == Approx(r.raw));
}

TEST_CASE("rho agrees with the eps-scan oracle", "[chabauty][property]")
{
    const int N = 64;
    const TorusSpace X(1, 1.0, N);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> t(0.02, 0.5);
    std::uniform_real_distribution<double> s(0.0, 1.0);
    const double delta = 1.0 / (4 * N);
    for (int k = 0; k < 30; ++k) {
        const auto A = greedy_delone(X, t(rng), {s(rng), 0});
        const auto B = greedy_delone(X, t(rng), {s(rng), 0});
        const double closed = rho(A, B).value;
        const double scan = oracle::rho_scan(1, 1.0, {0, 0}, as_oracle(A.points()), as_oracle(B.points()), delta);
        CHECK(closed <= scan + 1e-12);
        CHECK(scan - closed <= delta + 1e-9);
    }
}

TEST_CASE("rho is a capped symmetric metric", "[chabauty][property]")
{
    const TorusSpace X(2, 1.0, 16);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> t(0.07, 0.7);
    std::uniform_real_distribution<double> s(0.0, 1.0);
    for (int k = 0; k < 40; ++k) {
        const auto A = greedy_delone(X, t(rng), {s(rng), s(rng)});
        const auto B = greedy_delone(X, t(rng), {s(rng), s(rng)});
        const auto C = greedy_delone(X, t(rng), {s(rng), s(rng)});
        const double ab = rho(A, B).value, bc = rho(B, C).value, ac = rho(A, C).value;
        CHECK(ab == rho(B, A).value);
        CHECK(ab <= 1.0);
        CHECK(ac <= ab + bc + 1e-12);
        if (ab == 0.0) CHECK(A.points().size() == B.points().size());
    }
}

TEST_CASE("far points are discounted by the 1/eps ball", "[chabauty]")
{
    // On a big torus a discrepancy at distance 5 from x0 only costs 1/5.
    const TorusSpace X(1, 20.0, 40, {0, 0});
    CHECK(rho(X, pts({0, 5}), pts({0})).value == Approx(0.2));
    CHECK(rho(X, pts({0, 0.5}), pts({0})).value == 0.5);
    CHECK(rho(X, pts({0, 3}), pts({0, 8})).value == 1.0 / 3);
    CHECK(rho(X, pts({0.5}), pts({8})).value == 1.0);
}

TEST_CASE("rho along a greedy schedule", "[chabauty]")
{
    const int N = 256;
    const TorusSpace X(1, 1.0, N);
    std::vector<DeloneSet> sets;
    for (int n = 1; n <= 6; ++n) sets.push_back(greedy_delone(X, std::ldexp(1.0, -n), {0, 0}));
    const auto seq = rho_sequence(X, sets);
    CHECK(seq.non_increasing);
    CHECK(seq.covering_bound_ok);
    CHECK(seq.rows.back().rho <= 2.0 / N + std::ldexp(1.0, -6));
    for (const auto& r : seq.rows) CHECK(r.R_cover <= r.rho + 1.0 / (2 * N));

    std::vector<DeloneSet> constant(4, sets[2]);
    const auto flat = rho_sequence(X, constant, sets[2].points());
    for (const auto& r : flat.rows) CHECK(r.rho == 0.0);
}

TEST_CASE("eps-net examples", "[chabauty]")
{
    const TorusSpace X(1, 1.0, 8);
    const std::vector<std::vector<Point>> cands{pts({0, 0.25, 0.5, 0.75})};
    const auto net = epsilon_net(X, 0.5, pts({0, 0.5}), cands);
    REQUIRE(net.net.size() == 1);
    CHECK(net.net[0] == std::vector<std::size_t>{0, 1});
    CHECK(net.coverage[0].distance == 0.25);
    CHECK(net.all_covered);

    const std::vector<std::vector<Point>> self{pts({0, 0.5})};
    CHECK(epsilon_net(X, 0.5, pts({0, 0.5}), self).coverage[0].distance == 0.0);

    const TorusSpace Y(1, 1.0, 64);
    const std::vector<std::vector<Point>> some{pts({0.1}), pts({0.2, 0.7})};
    const auto wide = epsilon_net(Y, 1.0, some);
    CHECK(wide.all_covered);
    CHECK_THROWS_WITH(epsilon_net(Y, 0.01, some), Catch::Matchers::ContainsSubstring("grid resolution"));
    CHECK_THROWS_AS(epsilon_net(Y, 1.5, some), Error);
}

TEST_CASE("eps-nets cover random controlled sets with off-grid points", "[chabauty][property]")
{
    for (int dim : {1, 2}) {
        const TorusSpace X(dim, 1.0, dim == 1 ? 128 : 24);
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> s(0.0, 1.0);
        std::vector<std::vector<Point>> cands;
        for (int k = 0; k < 20; ++k) {
            // Greedy set shifted off the grid keeps r >= R up to the grid gap.
            const auto D = greedy_delone(X, 0.05 + 0.4 * s(rng), {0, 0});
            const Point shift{s(rng), dim == 2 ? s(rng) : 0.0};
            std::vector<Point> p;
            for (const auto& q : D.points()) p.push_back(X.reduce({q[0] + shift[0], q[1] + shift[1]}));
            cands.push_back(p);
        }
        for (double eps : {0.5, 0.25}) {
            const auto net = epsilon_net(X, eps, cands);
            CHECK(net.all_covered);
            for (const auto& c : net.coverage) CHECK(c.distance <= eps);
        }
    }
}
