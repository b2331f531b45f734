#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "cramer/cumulant.hpp"
#include "cramer/errors.hpp"
#include "cramer/lattice.hpp"

using namespace cramer;
using Catch::Approx;

namespace {

CompoundModel exp_model(double lambda = 1.0) { return CompoundModel(lambda, SeverityModel::exponential(1.0)); }
CompoundModel point_model(double lambda = 1.0) { return CompoundModel(lambda, SeverityModel::point_mass(1.0)); }

std::vector<CompoundModel> models() {
    return {exp_model(), point_model(2.0), CompoundModel(1.5, SeverityModel::gamma(2.0)),
            CompoundModel(0.7, SeverityModel::mixture({0.3, 0.5, 0.2}, {1.0, 2.0, 4.0})),
            CompoundModel(3.0, SeverityModel::lattice(0.5, {0.2, 0.3, 0.5}))};
}

double top_xi(const Cumulant& m) { return std::isfinite(m.abscissa()) ? 0.9 * m.abscissa() : 3.0; }

// integral of e^{-s y} phi(y) over [0, inf) by Simpson
double esscher_quadrature(double s) {
    const double hi = 40.0;
    const int n = 400000;
    const double h = hi / n;
    auto f = [s](double y) { return std::exp(-s * y - 0.5 * y * y) / std::sqrt(2 * std::numbers::pi); };
    double acc = f(0.0) + f(hi);
    for (int i = 1; i < n; ++i) acc += f(i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

}  // namespace

TEST_CASE("cumulant function examples") {
    CHECK(exp_model().g(0.5) == Approx(1.0).epsilon(1e-15));
    CHECK(point_model(2.0).g(1.0) == Approx(2.0 * (std::exp(1.0) - 1.0)).epsilon(1e-15));
    CHECK(point_model(2.0).g(1.0) == Approx(3.43656).margin(1e-5));
    for (const auto& m : models()) {
        CHECK(m.g(0.0) == 0.0);
        CHECK(m.g_prime(0.0) == Approx(m.lambda() * m.severity().mean()).epsilon(1e-14));
        CHECK(m.g_second(0.0) == Approx(m.lambda() * m.severity().second_moment()).epsilon(1e-14));
        CHECK(m.mean_rate() == Approx(m.g_prime(0.0)).epsilon(1e-14));
    }
    CHECK_THROWS_AS(exp_model().g(1.0), DomainError);
    CHECK_THROWS_AS(CompoundModel(0.0, SeverityModel::exponential(1.0)), DomainError);
}

TEST_CASE("entropy examples") {
    const auto e = entropy(exp_model(), 4.0);
    CHECK(e.xi == Approx(0.5).epsilon(1e-12));
    CHECK(e.h == Approx(1.0).epsilon(1e-12));
    for (const auto& m : models()) {
        const auto p = entropy(m, m.mean_rate());
        CHECK(p.xi == 0.0);
        CHECK(p.h == 0.0);
    }
    const auto pm = entropy(point_model(2.0), 2.0);
    CHECK(pm.xi == 0.0);
    CHECK(pm.h == 0.0);
    CHECK_THROWS_AS(entropy(exp_model(), 0.0), DomainError);
    CHECK_THROWS_AS(entropy(exp_model(), -1.0), DomainError);
}

TEST_CASE("entropy against the closed forms") {
    // h(x) = lambda (sqrt(x/lambda) - 1)^2 for unit exponential claims
    for (double x : {0.05, 0.3, 0.9, 1.7, 4.0, 25.0}) {
        const auto p = entropy(exp_model(), x);
        CHECK(p.h == Approx(std::pow(std::sqrt(x) - 1.0, 2)).epsilon(1e-11).margin(1e-14));
        CHECK((p.xi > 0) == (x > 1.0));
    }
    // point mass: h(x) = x log(x/lambda) - x + lambda
    for (double x : {0.01, 0.5, 2.0, 7.0, 40.0}) {
        const auto p = entropy(point_model(2.0), x);
        CHECK(p.h == Approx(x * std::log(x / 2.0) - x + 2.0).epsilon(1e-11));
    }
}

TEST_CASE("entropy is nonnegative and signs match") {
    for (const auto& m : models()) {
        const double mu = m.mean_rate();
        for (double f : {0.1, 0.5, 0.99, 1.01, 2.0, 5.0}) {
            const auto p = entropy(m, f * mu);
            CHECK(p.h >= -1e-12);
            CHECK((p.xi > 0) == (f > 1.0));
        }
    }
}

TEST_CASE("Legendre round trip") {
    for (const auto& m : models()) {
        const double top = top_xi(m);
        for (int i = 1; i <= 30; ++i) {
            const double xi = top * i / 30.0;
            const double x = m.g_prime(xi);
            const auto p = entropy(m, x);
            CHECK(std::abs(m.g(xi) - (x * xi - p.h)) <= 1e-8);
        }
    }
}

TEST_CASE("entropy derivatives") {
    for (const auto& m : models()) {
        for (double f : {0.5, 1.5, 3.0}) {
            const double x = f * m.mean_rate();
            const auto p = entropy(m, x);
            const double dx = 1e-4 * x;
            const double hp = entropy(m, x + dx).h, hm = entropy(m, x - dx).h;
            CHECK((hp - hm) / (2 * dx) == Approx(p.xi).margin(1e-6));
            const double d2 = 1e-3 * x;
            const double h2 = (entropy(m, x + d2).h - 2 * p.h + entropy(m, x - d2).h) / (d2 * d2);
            CHECK(h2 == Approx(1.0 / m.g_second(p.xi)).epsilon(1e-5));
        }
    }
}

TEST_CASE("Chernoff bound examples") {
    const auto one = chernoff_bound(exp_model(), 10.0, 1.0);
    CHECK(one.bound == 1.0);
    const auto e = chernoff_bound(exp_model(), 10.0, 4.0);
    CHECK(e.bound == Approx(std::exp(-10.0)).epsilon(1e-10));
    CHECK(e.bound == Approx(4.54e-5).epsilon(1e-3));
    CHECK(e.side == TailSide::upper);
    const auto p = chernoff_bound(point_model(), 5.0, 2.0);
    CHECK(p.bound == Approx(std::exp(-5.0 * (2.0 * std::log(2.0) - 1.0))).epsilon(1e-10));
    CHECK(p.bound == Approx(0.1449).margin(1e-4));
    // brute force maximization of x xi - g(xi) over a grid
    double best = 0.0;
    for (double xi = -2.0; xi <= 3.0; xi += 1e-5) best = std::max(best, 2.0 * xi - point_model().g(xi));
    CHECK(p.point.h == Approx(best).epsilon(1e-8));
    CHECK(chernoff_bound(point_model(), 5.0, 0.5).side == TailSide::lower);
}

TEST_CASE("Chernoff dominates exact lattice tails") {
    const auto m = point_model();
    const LatticeDistribution f(1.0, {0.0, 1.0});
    for (double t : {1.0, 5.0, 20.0, 60.0}) {
        const auto agg = panjer(t, f, static_cast<std::size_t>(10 * t + 60));
        int violations = 0;
        for (std::size_t n = static_cast<std::size_t>(std::floor(t)) + 1; n < agg.size(); ++n) {
            const double x = n / t;
            // below ~1e-13 the running complement is roundoff
            if (!(x > 1.0) || agg.at_least(n) < 1e-13) continue;
            if (agg.at_least(n) > chernoff_bound(m, t, x).bound) ++violations;
        }
        CHECK(violations == 0);
    }
}

TEST_CASE("Esscher function oracle values") {
    CHECK(esscher_function(0.0) == 0.5);
    CHECK(esscher_function(0.5) == Approx(0.34961883472039807).epsilon(1e-14));
    CHECK(esscher_function(1.0) == Approx(0.26157829186512337).epsilon(1e-14));
    CHECK(esscher_function(3.0) == Approx(0.12151394835556217).epsilon(1e-14));
    CHECK(esscher_function(7.9) == Approx(0.049725958869367827).epsilon(1e-13));
    CHECK(esscher_function(8.1) == Approx(0.048533408127440548).epsilon(1e-13));
    CHECK(esscher_function(10.0) == Approx(0.039506694101386003).epsilon(1e-14));
    CHECK(esscher_function(20.0) == Approx(0.019897615648327032).epsilon(1e-14));
    CHECK(esscher_function(50.0) == Approx(0.0079756578919930124).epsilon(1e-14));
    CHECK(esscher_function(200.0) == Approx(0.0019946615379617297).epsilon(1e-14));
    for (double s : {0.2, 1.0, 2.5, 6.0})
        CHECK(esscher_function(s) == Approx(esscher_quadrature(s)).epsilon(1e-10));
    // continuous across the evaluation switch
    CHECK(esscher_function(8.0) == Approx(esscher_function(std::nextafter(8.0, 9.0))).epsilon(1e-14));
    // decreasing
    double prev = 1.0;
    for (double s = 0.0; s < 60.0; s += 0.25) {
        CHECK(esscher_function(s) < prev);
        prev = esscher_function(s);
    }
}

TEST_CASE("discrete Esscher function") {
    CHECK(esscher_function_discrete(0.4, 0.3) == Approx(0.28570257566827407).epsilon(1e-13));
    CHECK(esscher_function_discrete(2.0, 1.0) == Approx(0.43268936640157989).epsilon(1e-13));
    // b -> 0 limit b / (sqrt(2 pi) (1 - e^{-s}))
    for (double s : {0.5, 1.0, 3.0}) {
        double prev_err = 1.0;
        for (double b : {1e-1, 1e-2, 1e-3, 1e-4}) {
            const double lim = b / (std::sqrt(2 * std::numbers::pi) * (1 - std::exp(-s)));
            const double err = std::abs(esscher_function_discrete(s, b) / lim - 1.0);
            CHECK(err < prev_err);
            prev_err = err;
        }
        CHECK(prev_err < 1e-6);
    }
    CHECK_THROWS_AS(esscher_function_discrete(-1.0, 0.5), DomainError);
    CHECK_THROWS_AS(esscher_function_discrete(1.0, 0.0), DomainError);
}

TEST_CASE("Esscher tail for exponential claims") {
    const auto m = exp_model();
    const auto e = esscher_tail(m, 100.0, 1.5);
    CHECK(e.tilt == Approx(1.0 - std::sqrt(2.0 / 3.0)).epsilon(1e-12));
    CHECK(e.tilt == Approx(0.18350).margin(1e-5));
    CHECK(e.entropy == Approx(std::pow(std::sqrt(1.5) - 1.0, 2)).epsilon(1e-12));
    CHECK(e.entropy == Approx(0.05051).margin(1e-5));
    CHECK(e.canonical == Approx(std::exp(-100.0 * e.entropy) * esscher_function(e.tilt * e.sigma)).epsilon(1e-14));
    const double s = e.tilt * e.sigma;
    CHECK(std::abs(e.canonical / e.alternative - 1.0) < 1.5 / (s * s));
    CHECK_FALSE(e.low_quality);

    // against the Panjer tail of a finely discretized model, bracketed by
    // left and right endpoint lattices
    const double d = 0.01;
    const auto sev = m.severity();
    const auto right = discretize(sev, d, cells_for_tail(sev, d));
    const auto agg = panjer(100.0, right, 15000);
    const double upper = agg.at_least(15000);
    // left endpoint lattice: shift right lattice mass one cell down and drop claims of size 0
    std::vector<double> left(right.size() - 1, 0.0);
    for (std::size_t n = 1; n + 1 < right.size(); ++n) left[n] = right.mass(n + 1);
    const double lost = right.mass(1);
    for (double& x : left) x /= 1.0 - lost;
    // claims below d are dropped and the intensity thinned accordingly
    const auto agg_left = panjer(100.0 * (1.0 - lost), LatticeDistribution(d, left), 15000);
    const double lower = agg_left.at_least(15000);
    CHECK(lower < upper);
    const double mid = std::sqrt(lower * upper);
    CHECK(e.canonical / mid == Approx(1.0).margin(0.05));
}

TEST_CASE("Esscher tail contract") {
    CHECK_THROWS_AS(esscher_tail(exp_model(), 10.0, 0.5), DomainError);
    CHECK_THROWS_AS(esscher_tail(exp_model(), 10.0, 1.0), DomainError);
    CHECK_THROWS_AS(esscher_tail(point_model(), 10.0, 1.5), LatticeSeverityError);
    CHECK_THROWS_AS(esscher_tail_lattice(point_model(), 20.0, 1.0), DomainError);
    CHECK_THROWS_AS(esscher_tail_lattice(exp_model(), 20.0, 1.5), DomainError);
    // near the mean the prefactor blows up and the flag is raised
    const auto near = esscher_tail(exp_model(), 10.0, 1.0001);
    CHECK(near.low_quality);
    CHECK(near.alternative > 1.0);
}

TEST_CASE("modified Esscher for a point mass") {
    const auto m = point_model();
    const auto e = esscher_tail_lattice(m, 20.0, 1.5);
    CHECK(e.tilt == Approx(std::log(1.5)).epsilon(1e-12));
    CHECK(e.entropy == Approx(1.5 * std::log(1.5) - 0.5).epsilon(1e-12));
    CHECK(e.entropy == Approx(0.10819).margin(1e-5));
    CHECK(e.prefactor == Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(e.sigma * e.sigma == Approx(30.0).epsilon(1e-12));
    CHECK(e.canonical == Approx(0.025100232282).epsilon(1e-10));
    const auto agg = panjer(20.0, LatticeDistribution(1.0, {0.0, 1.0}), 30);
    CHECK(agg.at_least(30) == Approx(0.021818217526).epsilon(1e-9));
}

TEST_CASE("lattice prefactor tends to the tilt as the span shrinks") {
    // A(d) -> a for fixed a
    const double a = 0.4;
    for (double d : {1e-2, 1e-4, 1e-6}) CHECK(-std::expm1(-a * d) / d == Approx(a).epsilon(d));
}

TEST_CASE("suggest_n_out") {
    const auto m = point_model();
    const std::size_t n = suggest_n_out(m, 20.0, 1.0);
    CHECK(std::exp(-20.0 * entropy(m, n / 20.0).h) < 1e-12);
    CHECK(std::exp(-20.0 * entropy(m, (n - 1) / 20.0).h) >= 1e-12);
    const auto agg = panjer(20.0, LatticeDistribution(1.0, {0.0, 1.0}), n);
    CHECK(agg.remainder() < 1e-12);
}

TEST_CASE("tilted model has mean rate g'(a)") {
    for (const auto& m : models()) {
        const double a = 0.5 * top_xi(m);
        const auto t = m.tilt(a);
        CHECK(t.lambda() * t.severity().mean() == Approx(m.g_prime(a)).epsilon(1e-10));
        CHECK(t.lambda() == Approx(m.lambda() * m.severity().mgf(a)).epsilon(1e-14));
    }
}

TEST_CASE("pooled cumulant sums its parts") {
    const PooledCumulant p({exp_model(), point_model(2.0)});
    CHECK(p.g(0.3) == Approx(exp_model().g(0.3) + point_model(2.0).g(0.3)));
    CHECK(p.abscissa() == 1.0);
    CHECK(p.mean_rate() == Approx(3.0));
    CHECK(entropy(p, 5.0).h >= 0.0);
}

TEST_CASE("portfolio to compound examples") {
    const auto one = portfolio_to_compound({{1.0, 1.0 - std::exp(-1.0)}});
    CHECK(one.model.lambda() == Approx(1.0).epsilon(1e-15));
    CHECK(std::holds_alternative<PointMass>(one.model.severity().variant()));
    CHECK(one.model.severity().lattice_span() == 1.0);

    const auto small = portfolio_to_compound({{2.0, 0.01}});
    CHECK(small.model.lambda() == Approx(-std::log(0.99)).epsilon(1e-15));
    CHECK(small.model.lambda() == Approx(0.0100503).margin(1e-7));

    const double p = 0.3;
    const auto two = portfolio_to_compound({{1.0, p}, {1.0, p}});
    CHECK(two.model.lambda() == Approx(-2.0 * std::log(1 - p)).epsilon(1e-15));
    REQUIRE(two.atoms.size() == 1);
    CHECK(two.atoms[0].second == 1.0);

    const auto mixed = portfolio_to_compound({{1.0, 0.1}, {2.5, 0.2}, {1.0, 0.05}});
    REQUIRE(mixed.atoms.size() == 2);
    CHECK(mixed.model.severity().lattice_span() == Approx(0.5));
    CHECK(mixed.atoms[0].second + mixed.atoms[1].second == Approx(1.0));
    CHECK(mixed.sum_p_squared == Approx(0.01 + 0.04 + 0.0025));
    CHECK_FALSE(mixed.degenerate);
    CHECK(portfolio_to_compound({{1.0, 0.995}}).degenerate);
    CHECK_THROWS_AS(portfolio_to_compound({}), DomainError);
    CHECK_THROWS_AS(portfolio_to_compound({{1.0, 1.0}}), DomainError);
}

TEST_CASE("portfolio exact tail examples") {
    CHECK(portfolio_exact_tail({{2.0, 0.3}}, 1.0) == Approx(0.3));
    CHECK(portfolio_exact_tail({{1.0, 0.5}, {1.0, 0.5}}, 1.5) == Approx(0.25));
    Portfolio ten(10, {1.0, 0.1});
    // P(Bin(10, 0.1) >= 3)
    double below = 0.0;
    for (int k = 0; k <= 2; ++k) below += std::tgamma(11.0) / (std::tgamma(k + 1.0) * std::tgamma(11.0 - k)) *
                                          std::pow(0.1, k) * std::pow(0.9, 10 - k);
    CHECK(portfolio_exact_tail(ten, 2.5) == Approx(1.0 - below).epsilon(1e-12));
    CHECK(portfolio_exact_tail(ten, 2.5) == Approx(0.0702).margin(1e-4));
    CHECK_THROWS_AS(portfolio_exact_tail(Portfolio(26, {1.0, 0.1}), 1.0), SizeError);
}

TEST_CASE("compound approximation of the individual model") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> P(0.001, 0.03);
    std::uniform_int_distribution<int> X(1, 4);
    for (int trial = 0; trial < 25; ++trial) {
        Portfolio pf;
        const int n = 4 + trial % 12;
        for (int i = 0; i < n; ++i) pf.push_back({0.5 * X(rng), P(rng)});
        const auto pc = portfolio_to_compound(pf);
        if (pc.sum_p_squared > 0.01) continue;
        const double d = pc.model.severity().lattice_span();
        const auto f = discretize(pc.model.severity(), d, cells_for_tail(pc.model.severity(), d));
        const auto agg = panjer(pc.model.lambda(), f, 200);
        const auto dist = portfolio_distribution(pf);
        double sup = 0.0;
        for (std::size_t m = 0; m < 200; ++m) {
            double exact = 0.0;
            for (const auto& [v, w] : dist)
                if (v > m * d + 1e-9) exact += w;
            sup = std::max(sup, std::abs(exact - agg.tail(m)));
        }
        CHECK(sup <= pc.sum_p_squared / 2 + 1e-9);
    }
}
