// One PASS/FAIL line per acceptance criterion; nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cramer/cli.hpp"
#include "cramer/cumulant.hpp"
#include "cramer/lattice.hpp"
#include "cramer/montecarlo.hpp"
#include "cramer/ruin.hpp"

using namespace cramer;

namespace {

int failures = 0;

void report(int id, const char* title, bool ok, const std::string& detail) {
    std::printf("%s criterion %d (%s): %s\n", ok ? "PASS" : "FAIL", id, title, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

template <class... A>
std::string fmt(const char* f, A... a) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

void guarded(int id, const char* title, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(id, title, false, std::string("exception: ") + e.what());
    }
}

RiskSystem exp_system(double c = 1.25, double u = 0.0) {
    return RiskSystem(CompoundModel(1.0, SeverityModel::exponential(1.0)), c, u);
}

double rel(double a, double b) { return std::abs(a / b - 1.0); }

void criterion1() {
    const auto start = std::chrono::steady_clock::now();
    const auto curve = ruin_panjer(exp_system(), 0.01, 10.0);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    double worst = 0.0;
    for (double u : {1.0, 2.0, 5.0, 10.0}) worst = std::max(worst, rel(curve.at(u), 0.8 * std::exp(-0.2 * u)));
    report(1, "exponential closed form", worst < 0.01 && secs < 5.0,
           fmt("max relative error %.4g at u in {1,2,5,10}, runtime %.3g s", worst, secs));
}

void criterion2() {
    const auto s = lundberg(exp_system());
    const double e = std::max({rel(s.R, 0.2), rel(s.C, 0.8), rel(s.tbar, 3.2), rel(s.sigma2, 3.90625)});
    report(2, "Lundberg solver exactness", e <= 1e-10,
           fmt("R=%.15g C=%.15g tbar=%.15g sigma2=%.15g, max rel error %.3g", s.R, s.C, s.tbar, s.sigma2, e));
}

void criterion3() {
    const auto sev = SeverityModel::mixture({0.3, 0.5, 0.2}, {1.0, 2.0, 4.0});
    const double lambda = 1.0, c = 1.2 * lambda * sev.mean();
    const RiskSystem sys(CompoundModel(lambda, sev), c);
    const auto mx = mixture_exact(sys);
    const auto& R = mx.roots;
    const bool interlaced = R.size() == 3 && 0 < R[0] && R[0] < 1 && 1 < R[1] && R[1] < 2 && 2 < R[2] && R[2] < 4;
    double sumC = 0.0;
    for (double v : mx.coefficients) sumC += v;
    const double cerr = std::abs(sumC - lambda * sev.mean() / c);
    const auto curve = ruin_panjer(sys, 0.005, 5.0);
    const double e = std::max(rel(curve.at(2.0), mx.total(2.0)), rel(curve.at(5.0), mx.total(5.0)));
    report(3, "mixture interlacing", interlaced && cerr <= 1e-8 && e < 0.01,
           fmt("roots %.6g %.6g %.6g, |sum C - r| = %.3g, recursion vs exact %.4g", R[0], R[1], R[2], cerr, e));
}

// compound Poisson sum by direct convolution powers; with no mass at zero, k <= n terms suffice below n_out
std::vector<double> convolution_oracle(double lt, const std::vector<double>& f, std::size_t n_out) {
    std::vector<double> out(n_out, 0.0), power(n_out, 0.0);
    power[0] = 1.0;
    double weight = std::exp(-lt);
    for (std::size_t k = 0; k < n_out; ++k) {
        for (std::size_t n = 0; n < n_out; ++n) out[n] += weight * power[n];
        std::vector<double> next(n_out, 0.0);
        for (std::size_t n = 0; n < n_out; ++n)
            if (power[n] != 0.0)
                for (std::size_t j = 1; j < f.size() && n + j < n_out; ++j) next[n + j] += power[n] * f[j];
        power = std::move(next);
        weight *= lt / static_cast<double>(k + 1);
    }
    return out;
}

void criterion4() {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0;
    int cases = 0;
    for (double lt : {0.1, 0.5, 1.0, 2.5, 5.0})
        for (int rep = 0; rep < 8; ++rep) {
            const std::size_t atoms = 1 + rep % 4;
            std::vector<double> f(1, 0.0);
            std::vector<std::size_t> pos;
            while (pos.size() < atoms) {
                const std::size_t p = 1 + static_cast<std::size_t>(U(rng) * 6);
                if (std::find(pos.begin(), pos.end(), p) == pos.end()) pos.push_back(p);
            }
            f.resize(*std::max_element(pos.begin(), pos.end()) + 1, 0.0);
            double tot = 0.0;
            for (auto p : pos) tot += f[p] = 0.1 + U(rng);
            for (auto& v : f) v /= tot;
            const auto agg = panjer(lt, LatticeDistribution(1.0, f), 60);
            const auto oracle = convolution_oracle(lt, f, 60);
            double tv = 0.0;
            for (std::size_t n = 0; n < 60; ++n) tv += std::abs(agg.mass(n) - oracle[n]);
            worst = std::max(worst, 0.5 * tv);
            ++cases;
        }
    report(4, "Panjer vs brute force", worst <= 1e-10, fmt("%d cases, max total variation %.3g", cases, worst));
}

void criterion5() {
    const CompoundModel m(1.0, SeverityModel::point_mass(1.0));
    const LatticeDistribution f(1.0, {0.0, 1.0});
    int violations = 0, checked = 0;
    for (double t : {5.0, 20.0}) {
        const auto agg = panjer(t, f, static_cast<std::size_t>(10 * t + 60));
        for (std::size_t n = 1; n < agg.size(); ++n) {
            const double x = static_cast<double>(n) / t;
            if (!(x > 1.0)) continue;
            ++checked;
            if (agg.at_least(n) > chernoff_bound(m, t, x).bound) ++violations;
        }
    }
    report(5, "Chernoff domination", violations == 0, fmt("%d violations over %d lattice levels", violations, checked));
}

void criterion6() {
    const CompoundModel m(1.0, SeverityModel::point_mass(1.0));
    const LatticeDistribution f(1.0, {0.0, 1.0});
    auto ratio = [&](double t) {
        const auto n = static_cast<std::size_t>(std::llround(1.5 * t));
        return esscher_tail_lattice(m, t, 1.5).canonical / panjer(t, f, n + 1).at_least(n);
    };
    const double r50 = ratio(50.0), r200 = ratio(200.0);
    report(6, "Esscher accuracy trend", r50 >= 0.9 && r50 <= 1.1 && std::abs(r200 - 1) < std::abs(r50 - 1),
           fmt("ratio %.6g at t=50, %.6g at t=200", r50, r200));
}

void criterion7() {
    const double d = 0.01;
    const auto curve = ruin_panjer(exp_system(), d, 20.0);
    const double R = lundberg(exp_system()).R;
    int violations = 0;
    for (std::size_t m = 0; m < curve.values().size(); ++m)
        if (curve.values()[m] > std::exp(-R * m * d) * (1 + 5 * d)) ++violations;
    report(7, "Lundberg inequality", violations == 0,
           fmt("%d violations over %zu grid points", violations, curve.values().size()));
}

void criteria8and9() {
    const double u = 20.0;
    const auto sys = exp_system(1.25, u);
    SimulationPlan plan(sys);
    plan.horizon = 800.0;
    plan.n_paths = 1000000;
    plan.seed = 20240611;
    plan.workers = 0;
    const std::vector<double> early{2.0, 2.8}, late{4.0, 6.0};
    for (double t : early) plan.ruin_by.push_back(u * t);
    for (double t : late) plan.ruin_by.push_back(u * t);
    plan.keep_ruin_times = true;
    const auto res = simulate(plan);
    const double n = static_cast<double>(res.n_paths);

    guarded(8, "finite-time bounds", [&] {
        int violations = 0;
        std::ostringstream d;
        for (std::size_t i = 0; i < early.size(); ++i) {
            const auto& est = res.ruin_by[i].second;
            const double b = finite_time_bound(sys, u, early[i]).bound;
            if (est.value - 3 * est.std_error > b) ++violations;
            d << fmt("P(T<=%gu)=%.5g+-%.2g vs %.5g; ", early[i], est.value, est.std_error, b);
        }
        for (std::size_t i = 0; i < late.size(); ++i) {
            const double q = res.ruin->value - res.ruin_by[early.size() + i].second.value;
            const double se = std::sqrt(q * (1 - q) / n);
            const double b = finite_time_bound(sys, u, late[i]).bound;
            if (q - 3 * se > b) ++violations;
            d << fmt("P(%gu<T)=%.5g+-%.2g vs %.5g; ", late[i], q, se, b);
        }
        d << violations << " violations";
        report(8, "finite-time bounds", violations == 0, d.str());
    });

    guarded(9, "ruin-time CLT", [&] {
        const auto clt = ruin_time_clt(sys, u, 0.0);
        const auto& mean = *res.ruin_time_mean;
        const double var = *res.ruin_time_variance;
        const bool mean_ok = std::abs(mean.value - clt.mean) <= 3 * mean.std_error;
        const bool var_ok = std::abs(var / clt.variance - 1.0) <= 0.2;
        const double r = cramer_lundberg_approx(sys, u).approximation;
        const double B = res.horizon_remainder_bound.value_or(finite_time_bound(sys, u, plan.horizon / u).bound);
        const auto& f = *res.ruin;
        const double gap = f.value > r ? f.value - r : (f.value < r - B ? r - B - f.value : 0.0);
        const bool freq_ok = gap <= 3 * f.std_error;
        report(9, "ruin-time CLT", mean_ok && var_ok && freq_ok,
               fmt("mean %.5g+-%.2g vs %.5g (%s); variance %.5g vs %.5g (%s); frequency %.5g+-%.2g vs [%.5g, %.5g] (%s)",
                   mean.value, mean.std_error, clt.mean, mean_ok ? "ok" : "outside 3 SE", var, clt.variance,
                   var_ok ? "ok" : "outside 20%", f.value, f.std_error, r - B, r, freq_ok ? "ok" : "outside 3 SE"));
    });
}

void criterion10() {
    std::vector<double> lx, ly;
    for (double rho : {0.05, 0.1, 0.2}) {
        const double R = lundberg(exp_system(1.0 + rho)).R;
        const double R2 = lundberg_series(1.0, 2.0, 6.0, rho).R2;
        lx.push_back(std::log(rho));
        ly.push_back(std::log(std::abs(R2 - R)));
    }
    const double mx = (lx[0] + lx[1] + lx[2]) / 3, my = (ly[0] + ly[1] + ly[2]) / 3;
    double sxy = 0, sxx = 0;
    for (int i = 0; i < 3; ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
    const double slope = sxy / sxx;
    report(10, "moment expansion order", slope >= 2.7, fmt("log-log slope %.4g", slope));
}

void criterion11() {
    const Portfolio pf(10, {1.0, 0.1});
    const auto pc = portfolio_to_compound(pf);
    const auto agg = panjer(pc.model.lambda(), LatticeDistribution(1.0, {0.0, 1.0}), 40);
    // binomial enumeration
    std::vector<double> pmf(11);
    for (int k = 0; k <= 10; ++k)
        pmf[k] = std::exp(std::lgamma(11.0) - std::lgamma(k + 1.0) - std::lgamma(11.0 - k)) * std::pow(0.1, k) *
                 std::pow(0.9, 10 - k);
    double sup = 0.0;
    for (int m = 0; m < 40; ++m) {
        double exact = 0.0;
        for (int k = m + 1; k <= 10; ++k) exact += pmf[k];
        sup = std::max(sup, std::abs(exact - agg.tail(static_cast<std::size_t>(m))));
    }
    const double limit = pc.sum_p_squared / 2 + 1e-9;
    report(11, "individual-model approximation", sup <= limit, fmt("sup distance %.6g, limit %.10g", sup, limit));
}

void criterion12() {
    const RiskSystem sys(CompoundModel(1.0, SeverityModel::point_mass(1.0)), 2.0, 0.0);
    const double d = 0.1;
    std::vector<double> f(11, 0.0);
    f[10] = 1.0;
    double worst = 0.0;
    for (double t : {0.5, 1.0, 2.0, 4.0}) {
        const auto agg = panjer(t, LatticeDistribution(d, f), static_cast<std::size_t>(400 * t + 200));
        worst = std::max(worst, std::abs(seal(sys, t, d) - (1.0 - non_ruin_zero(sys, t, agg))));
    }
    const auto with_u = sys.with_capital(1.0);
    const double s = seal(with_u, 2.0, d);
    SimulationPlan plan(with_u);
    plan.horizon = 2.0;
    plan.n_paths = 1000000;
    plan.seed = 12;
    plan.workers = 0;
    const auto mc = *simulate(plan).ruin;
    const bool ok = worst <= 1e-6 && std::abs(mc.value - s) <= 3 * mc.std_error;
    report(12, "Seal consistency", ok,
           fmt("max |seal(0,t) - (1 - rbar(0,t))| = %.3g; r(1,2) seal %.8g vs MC %.6g+-%.2g", worst, s, mc.value,
               mc.std_error));
}

void criterion13() {
    const CompoundModel unit(1.0, SeverityModel::exponential(1.0));
    const auto s = composite_split(unit, unit, 0.2, 16.0);
    const double ce = std::abs(s.c - (s.c1 + s.c2)), ue = std::abs(s.u - (s.u1 + s.u2));
    const bool ok = ce <= 1e-10 && ue <= 1e-10 && std::abs(s.constant_ratio - 0.8) <= 1e-6 &&
                    std::abs(s.pooled_R - 0.2) <= 1e-10 && std::abs(s.pooled_u - s.u) <= 1e-10;
    report(13, "composite system", ok,
           fmt("c=%.12g u=%.12g (sum errors %.2g, %.2g), pooled %.6g, product %.6g, ratio C1C2/C=%.10g", s.c, s.u, ce,
               ue, s.pooled, s.product, s.constant_ratio));
}

std::string run(std::vector<std::string> args) {
    args.insert(args.begin(), "cramer");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return std::to_string(code) + "\n" + out.str();
}

void criterion14() {
    const std::string dir = CRAMER_TEST_DATA;
    const std::vector<std::vector<std::string>> commands{
        {"--set", "u=5", "simulate", "--model", dir + "/exponential.model", "--t", "5", "--x", "1.2", "--ruin-by", "10,50",
         "--hitting-below", "--conditional-time", "3"},
        {"tail", "--model", dir + "/exponential.model", "--t", "10", "--x", "1.5", "--mc"},
        {"ruin", "--model", dir + "/exponential.model", "--u", "2,5", "--mc"},
        {"seal", "--model", dir + "/point.model", "--u", "1", "--t", "2", "--mc"}};
    int mismatches = 0;
    for (const auto& cmd : commands) {
        std::vector<std::string> outputs;
        for (const char* w : {"1", "8", "1", "8"}) {
            std::vector<std::string> a{"--format", "csv", "--seed", "99", "--paths", "20000", "--horizon", "100", "--workers", w};
            a.insert(a.end(), cmd.begin(), cmd.end());
            outputs.push_back(run(a));
        }
        for (const auto& o : outputs)
            if (o != outputs[0] || o.rfind("0\n", 0) != 0) ++mismatches;
    }
    report(14, "determinism", mismatches == 0,
           fmt("%zu commands x 2 runs x workers {1,8}: %d mismatching outputs", commands.size(), mismatches));
}

}  // namespace

int main() {
    guarded(1, "exponential closed form", criterion1);
    guarded(2, "Lundberg solver exactness", criterion2);
    guarded(3, "mixture interlacing", criterion3);
    guarded(4, "Panjer vs brute force", criterion4);
    guarded(5, "Chernoff domination", criterion5);
    guarded(6, "Esscher accuracy trend", criterion6);
    guarded(7, "Lundberg inequality", criterion7);
    criteria8and9();
    guarded(10, "moment expansion order", criterion10);
    guarded(11, "individual-model approximation", criterion11);
    guarded(12, "Seal consistency", criterion12);
    guarded(13, "composite system", criterion13);
    guarded(14, "determinism", criterion14);
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
