#include "cramer/cumulant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "cramer/errors.hpp"

namespace cramer {
namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
const double sqrt_2pi = std::sqrt(2.0 * std::numbers::pi);

}  // namespace

CompoundModel::CompoundModel(double lambda, SeverityModel severity)
    : lambda_(lambda), severity_(std::move(severity)) {
    if (!(lambda_ > 0.0) || !std::isfinite(lambda_)) throw DomainError("claim intensity must be positive");
}

CompoundModel CompoundModel::tilt(double a) const {
    return CompoundModel(lambda_ * severity_.mgf(a), severity_.tilt(a));
}

PooledCumulant::PooledCumulant(std::vector<CompoundModel> parts) : parts_(std::move(parts)) {
    if (parts_.empty()) throw DomainError("pooled model needs at least one part");
}

double PooledCumulant::g(double xi) const {
    double s = 0.0;
    for (const auto& p : parts_) s += p.g(xi);
    return s;
}

double PooledCumulant::g_prime(double xi) const {
    double s = 0.0;
    for (const auto& p : parts_) s += p.g_prime(xi);
    return s;
}

double PooledCumulant::g_second(double xi) const {
    double s = 0.0;
    for (const auto& p : parts_) s += p.g_second(xi);
    return s;
}

double PooledCumulant::abscissa() const {
    double a = inf;
    for (const auto& p : parts_) a = std::min(a, p.abscissa());
    return a;
}

double PooledCumulant::mean_rate() const {
    double s = 0.0;
    for (const auto& p : parts_) s += p.mean_rate();
    return s;
}

EntropyPoint entropy(const Cumulant& model, double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("entropy level must be positive");
    const double m0 = model.mean_rate();
    if (x == m0) return {x, 0.0, 0.0};

    // bracket [lo, hi] with g'(lo) <= x <= g'(hi)
    double lo = 0.0, hi = 0.0;
    const double top = model.abscissa();
    if (x > m0) {
        bool found = false;
        for (int k = 1; k <= 200; ++k) {
            const double cand = std::isfinite(top) ? top * (1.0 - std::ldexp(1.0, -k)) : std::ldexp(1.0, k - 1);
            if (std::isfinite(top) && !(cand < top)) break;
            if (model.g_prime(cand) >= x) {
                hi = cand;
                found = true;
                break;
            }
            lo = cand;
        }
        if (!found) throw ConvergenceError("entropy level is not attained below the abscissa");
    } else {
        bool found = false;
        for (int k = 0; k <= 1100; ++k) {
            const double cand = -std::ldexp(1.0, k);
            if (!std::isfinite(cand)) break;
            if (model.g_prime(cand) <= x) {
                lo = cand;
                found = true;
                break;
            }
            hi = cand;
        }
        if (!found) throw ConvergenceError("entropy level is not attained");
    }

    // g' is increasing and convex, so Newton from the upper end converges monotonically
    double xi = hi;
    bool converged = false;
    for (int it = 0; it < 500; ++it) {
        const double f = model.g_prime(xi) - x;
        if (f == 0.0) {
            converged = true;
            break;
        }
        (f > 0.0 ? hi : lo) = xi;
        const double fp = model.g_second(xi);
        double next = xi - f / fp;
        if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - xi);
        xi = next;
        if (step <= 1e-14 * std::abs(xi) || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(xi)) {
            converged = true;
            break;
        }
    }
    if (!converged) throw ConvergenceError("entropy root did not converge");
    double h = x * xi - model.g(xi);
    if (h < 0.0 && h > -1e-12) h = 0.0;
    return {x, xi, h};
}

ChernoffBound chernoff_bound(const Cumulant& model, double t, double x) {
    if (!(t > 0.0)) throw DomainError("time must be positive");
    const auto p = entropy(model, x);
    const TailSide side = x >= model.mean_rate() ? TailSide::upper : TailSide::lower;
    return {std::exp(-t * p.h), side, p};
}

double esscher_function(double s) {
    if (std::isnan(s)) return s;
    if (s <= 8.0) return std::exp(0.5 * s * s) * 0.5 * std::erfc(s / std::numbers::sqrt2);
    // Mills ratio by continued fraction 1/(s+1/(s+2/(s+3/(s+...)))), modified Lentz
    constexpr double tiny = 1e-300;
    double f = s, c = s, d = 0.0;
    for (int k = 1; k < 500; ++k) {
        d = s + k * d;
        if (d == 0.0) d = tiny;
        c = s + k / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return 1.0 / (f * sqrt_2pi);
}

double esscher_function_discrete(double s, double b) {
    if (!(s >= 0.0)) throw DomainError("discrete Esscher function needs s >= 0");
    if (!(b > 0.0)) throw DomainError("discrete Esscher function needs b > 0");
    double sum = 0.0;
    for (std::size_t n = 0;; ++n) {
        const double nb = static_cast<double>(n) * b;
        const double term = std::exp(-s * static_cast<double>(n) - 0.5 * nb * nb) / sqrt_2pi * b;
        sum += term;
        if (term < 1e-16 * sum || term == 0.0) break;
    }
    return sum;
}

namespace {

struct TiltedLevel {
    double a, h, sigma;
};

TiltedLevel tilted_level(const CompoundModel& model, double t, double x) {
    if (!(t > 0.0)) throw DomainError("time must be positive");
    if (!(x > model.mean_rate())) throw DomainError("Esscher approximation needs x above the mean rate");
    const auto p = entropy(model, x);
    return {p.xi, p.h, std::sqrt(t * model.g_second(p.xi))};
}

}  // namespace

EsscherTail esscher_tail(const CompoundModel& model, double t, double x) {
    if (model.severity().is_lattice())
        throw LatticeSeverityError("lattice severity: use the lattice form of the Esscher approximation");
    const auto [a, h, sigma] = tilted_level(model, t, x);
    const double lead = std::exp(-t * h);
    const double s = a * sigma;
    return {lead * esscher_function(s), lead / (sqrt_2pi * s), a, sigma, h, a, s < 1.0};
}

EsscherTail esscher_tail_lattice(const CompoundModel& model, double t, double x) {
    if (!model.severity().is_lattice()) throw DomainError("lattice Esscher approximation needs a lattice severity");
    const double d = model.severity().lattice_span();
    const auto [a, h, sigma] = tilted_level(model, t, x);
    const double lead = std::exp(-t * h);
    const double A = -std::expm1(-a * d) / d;
    return {lead / (sqrt_2pi * A * sigma), lead * esscher_function_discrete(a * d, d / sigma), a, sigma, h, A,
            a * sigma < 1.0};
}

std::size_t suggest_n_out(const Cumulant& model, double t, double span, double eps) {
    if (!(t > 0.0) || !(span > 0.0)) throw DomainError("time and span must be positive");
    const double target = -std::log(eps) / t;  // need h(x) > target
    auto ok = [&](std::size_t n) {
        const double x = static_cast<double>(n) * span / t;
        if (!(x > model.mean_rate())) return false;
        return entropy(model, x).h > target;
    };
    std::size_t hi = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(model.mean_rate() * t / span)));
    while (!ok(hi)) {
        if (hi > (std::size_t{1} << 40)) throw SizeError("suggested truncation is unreasonably large");
        hi *= 2;
    }
    std::size_t lo = hi / 2;
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        (ok(mid) ? hi : lo) = mid;
    }
    return hi;
}

namespace {

void check_policies(const Portfolio& portfolio) {
    if (portfolio.empty()) throw DomainError("portfolio is empty");
    for (const auto& p : portfolio) {
        if (!(p.sum_at_risk > 0.0) || !std::isfinite(p.sum_at_risk))
            throw DomainError("sum at risk must be positive");
        if (!(p.probability > 0.0 && p.probability < 1.0))
            throw DomainError("loss probability must lie in (0, 1)");
    }
}

bool near_equal(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

// Largest d with every x an integer multiple of d (to relative tolerance).
double real_gcd(std::vector<double> xs) {
    double d = xs.front();
    for (double x : xs) {
        double a = std::max(d, x), b = std::min(d, x);
        const double tol = 1e-9 * xs.back();
        while (b > tol) {
            const double r = std::fmod(a, b);
            a = b;
            b = (r > b - tol) ? 0.0 : r;
        }
        d = a;
    }
    return d;
}

}  // namespace

PortfolioCompound portfolio_to_compound(const Portfolio& portfolio) {
    check_policies(portfolio);
    std::map<double, double> by_x;
    double lambda = 0.0, p2 = 0.0;
    bool degenerate = false;
    for (const auto& p : portfolio) {
        const double li = -std::log1p(-p.probability);
        by_x[p.sum_at_risk] += li;
        lambda += li;
        p2 += p.probability * p.probability;
        degenerate = degenerate || p.probability > 0.99;
    }
    std::vector<std::pair<double, double>> atoms;
    for (const auto& [x, li] : by_x) {
        if (!atoms.empty() && near_equal(atoms.back().first, x)) {
            atoms.back().second += li;
        } else {
            atoms.emplace_back(x, li);
        }
    }
    for (auto& a : atoms) a.second /= lambda;

    if (atoms.size() == 1) {
        atoms.front().second = 1.0;
        return {CompoundModel(lambda, SeverityModel::point_mass(atoms.front().first)), atoms, p2, degenerate};
    }
    std::vector<double> xs;
    for (const auto& a : atoms) xs.push_back(a.first);
    const double d = real_gcd(xs);
    const double cells = std::round(xs.back() / d);
    if (cells > 1e7) throw SizeError("sums at risk have no usable common span");
    std::vector<double> masses(static_cast<std::size_t>(cells), 0.0);
    double total = 0.0;
    for (const auto& [x, w] : atoms) total += w;
    for (const auto& [x, w] : atoms) masses[static_cast<std::size_t>(std::round(x / d)) - 1] += w / total;
    return {CompoundModel(lambda, SeverityModel::lattice(d, std::move(masses))), atoms, p2, degenerate};
}

std::vector<std::pair<double, double>> portfolio_distribution(const Portfolio& portfolio) {
    check_policies(portfolio);
    if (portfolio.size() > max_exact_policies) throw SizeError("too many policies for exact evaluation");
    std::vector<std::pair<double, double>> dist{{0.0, 1.0}}, shifted, merged;
    for (const auto& p : portfolio) {
        shifted.clear();
        for (auto& [v, w] : dist) shifted.emplace_back(v + p.sum_at_risk, w * p.probability);
        for (auto& [v, w] : dist) w *= 1.0 - p.probability;
        merged.clear();
        std::merge(dist.begin(), dist.end(), shifted.begin(), shifted.end(), std::back_inserter(merged),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
        dist.clear();
        for (const auto& e : merged) {
            if (!dist.empty() && near_equal(dist.back().first, e.first)) {
                dist.back().second += e.second;
            } else {
                dist.push_back(e);
            }
        }
    }
    return dist;
}

double portfolio_exact_tail(const Portfolio& portfolio, double x) {
    double s = 0.0;
    for (const auto& [v, w] : portfolio_distribution(portfolio))
        if (v > x) s += w;
    return s;
}

}  // namespace cramer
