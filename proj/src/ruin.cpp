#include "cramer/ruin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "cramer/errors.hpp"
#include "cramer/lattice.hpp"

namespace cramer {
namespace {

constexpr double eps = std::numeric_limits<double>::epsilon();

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// n with x = n d, or GridError
std::size_t grid_index(double x, double d, const char* what) {
    const double q = x / d;
    const double n = std::round(q);
    if (std::abs(q - n) > 1e-9 * std::max(1.0, q)) {
        std::ostringstream os;
        os << what << " (" << x << ") is not a multiple of the span " << d;
        throw GridError(os.str());
    }
    return static_cast<std::size_t>(n);
}

void require_positive_loading(const RiskSystem& sys) {
    if (sys.loading_sign() <= 0)
        throw LoadingError("premium rate does not exceed the expected claim rate; ruin is certain");
}

LatticeDistribution claim_lattice(const SeverityModel& sev, double d, double tail_tol) {
    return discretize(sev, d, cells_for_tail(sev, d, tail_tol), {tail_tol, false});
}

}  // namespace

RiskSystem::RiskSystem(CompoundModel model, double premium, double capital)
    : model_(std::move(model)), c_(premium), u_(capital) {
    if (!(c_ > 0.0) || !std::isfinite(c_)) throw DomainError("premium rate must be positive");
    if (!(u_ >= 0.0) || !std::isfinite(u_)) throw DomainError("initial capital must be nonnegative");
    const double m = model_.mean_rate();
    loading_ = c_ > m ? 1 : (c_ < m ? -1 : 0);
}

LadderLaw ladder(const RiskSystem& sys) {
    require_positive_loading(sys);
    return {sys.model().mean_rate() / sys.premium(), sys.model().severity()};
}

double RuinCurve::at(double u) const {
    const double q = u / span_;
    const double n = std::floor(q + 1e-9 * std::max(1.0, q));
    if (n < 0.0 || n >= static_cast<double>(values_.size())) throw DomainError("capital outside the computed curve");
    return values_[static_cast<std::size_t>(n)];
}

RuinCurve ruin_panjer(const RiskSystem& sys, double span, double u_max, RuinPanjerOptions opts) {
    const auto law = ladder(sys);
    if (!(span > 0.0)) throw DomainError("span must be positive");
    if (!(u_max >= 0.0)) throw DomainError("u_max must be nonnegative");
    const auto& sev = sys.model().severity();
    const auto k = law.discretize(span, cells_for_tail(sev, span, opts.tail_tol), {opts.tail_tol, false});
    const auto m_max = static_cast<std::size_t>(std::floor(u_max / span + 1e-9 * std::max(1.0, u_max / span)));
    const auto l = compound_geometric(law.r, k, m_max + 1);
    std::vector<double> values(m_max + 1);
    for (std::size_t m = 0; m <= m_max; ++m) values[m] = l.tail(m);
    return RuinCurve(span, std::move(values));
}

LundbergSolution lundberg(const Cumulant& model, double c) {
    const double m0 = model.mean_rate();
    if (!(c > 0.0)) throw DomainError("premium rate must be positive");
    if (c == m0) throw LoadingError("zero safety loading: the only root of g(a) = c a is 0");
    const bool positive = c > m0;

    auto phi = [&](double a) { return a == 0.0 ? m0 - c : model.g(a) / a - c; };
    auto psi = [&](double a) { return model.g(a) - c * a; };

    // inner end: phi < 0 on (0, lo] or [hi, 0); outer end: phi changes sign
    double inner = 0.0, outer = 0.0;
    const double top = model.abscissa();
    double sup_ratio = -std::numeric_limits<double>::infinity();
    bool found = false;
    for (int k = 0; k < 1100; ++k) {
        double cand;
        if (positive) {
            cand = std::isfinite(top) ? top * (1.0 - std::ldexp(1.0, -(k + 1))) : std::ldexp(1.0, k - 20);
            if (std::isfinite(top) && !(cand < top)) break;
        } else {
            cand = -std::ldexp(1.0, k - 20);
        }
        if (!std::isfinite(cand)) break;
        const double p = phi(cand);
        if (std::isnan(p)) break;
        sup_ratio = std::max(sup_ratio, p + c);
        if (positive ? p > 0.0 : p < 0.0) {
            outer = cand;
            found = true;
            break;
        }
        inner = cand;
    }
    if (!found) {
        std::ostringstream os;
        os << "g(a)/a never reaches the premium rate; sup reached " << sup_ratio;
        throw NoRootError(os.str(), sup_ratio);
    }

    // psi is convex; Newton from the outer end approaches R monotonically
    double lo = std::min(inner, outer), hi = std::max(inner, outer);
    double a = outer;
    bool converged = false;
    for (int it = 0; it < 500; ++it) {
        const double f = psi(a);
        const double sign_phi = phi(a);
        if (sign_phi == 0.0) {
            converged = true;
            break;
        }
        // phi > 0 on the far side of the root on the positive branch, phi < 0 on the negative one
        const bool beyond = positive ? sign_phi > 0.0 : sign_phi < 0.0;
        if (positive) {
            (beyond ? hi : lo) = a;
        } else {
            (beyond ? lo : hi) = a;
        }
        const double fp = model.g_prime(a) - c;
        double next = a - f / fp;
        if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - a);
        a = next;
        if (step <= 4.0 * eps * std::abs(a) || hi - lo <= 4.0 * eps * std::abs(a)) {
            converged = true;
            break;
        }
    }
    if (!converged || a == 0.0) throw ConvergenceError("Lundberg root did not converge");

    const double slope = model.g_prime(a) - c;
    LundbergSolution sol;
    sol.R = a;
    sol.C = (c - m0) / slope;
    sol.tbar = 1.0 / std::abs(slope);
    sol.sigma2 = model.g_second(a);
    return sol;
}

LundbergSolution lundberg(const RiskSystem& sys) { return lundberg(sys.model(), sys.premium()); }

CramerLundberg cramer_lundberg_approx(const RiskSystem& sys) { return cramer_lundberg_approx(sys, sys.capital()); }

CramerLundberg cramer_lundberg_approx(const RiskSystem& sys, double u) {
    require_positive_loading(sys);
    if (!(u >= 0.0)) throw DomainError("capital must be nonnegative");
    const auto sol = lundberg(sys);
    const double b = std::exp(-sol.R * u);
    return {sol.C * b, b};
}

SeriesExpansion lundberg_series(double mu1, double mu2, double mu3, double rho) {
    if (!(mu1 > 0.0 && mu2 > 0.0 && mu3 > 0.0)) throw DomainError("moments must be positive");
    if (!(rho >= 0.0)) throw DomainError("relative loading must be nonnegative");
    SeriesExpansion s;
    s.R1 = 2.0 * mu1 / mu2 * rho;
    s.R2 = s.R1 - 4.0 / 3.0 * (mu3 * mu1 * mu1 / (mu2 * mu2 * mu2)) * rho * rho;
    s.C1 = (mu2 / 2.0 + mu3 / 6.0 * s.R1) / (mu2 / 2.0 + mu3 / 3.0 * s.R1);
    return s;
}

double MixtureRuin::total(double u) const {
    double s = 0.0;
    for (std::size_t i = 0; i < roots.size(); ++i) s += coefficients[i] * std::exp(-roots[i] * u);
    return s;
}

double MixtureRuin::dominant(double u) const { return coefficients.front() * std::exp(-roots.front() * u); }

MixtureRuin mixture_exact(const RiskSystem& sys) {
    require_positive_loading(sys);
    std::vector<double> a, b;
    const auto& v = sys.model().severity().variant();
    if (const auto* e = std::get_if<Exponential>(&v)) {
        a = {1.0};
        b = {e->rate};
    } else if (const auto* m = std::get_if<ExponentialMixture>(&v)) {
        a = m->weights;
        b = m->rates;
    } else {
        throw DomainError("exact solution needs an exponential or mixture-of-exponentials severity");
    }
    const double lambda = sys.model().lambda();
    const double c = sys.premium();
    auto q = [&](double xi) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] / (b[i] - xi);
        return lambda * s - c;
    };

    MixtureRuin out;
    const double r = sys.model().mean_rate() / c;
    for (std::size_t i = 0; i < b.size(); ++i) {
        double lo = i == 0 ? 0.0 : b[i - 1];
        double hi = b[i];
        if (!(hi - lo > 1e-12 * hi)) throw RootBracketError("mixture rates too close to separate the roots");
        // q increases from below 0 to +inf on (lo, hi)
        for (int it = 0; it < 2000; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (!(mid > lo && mid < hi)) break;
            const double val = q(mid);
            if (!std::isfinite(val)) throw RootBracketError("mixture root bracket evaluates non-finite");
            (val > 0.0 ? hi : lo) = mid;
        }
        const double root = 0.5 * (lo + hi);
        const double left = i == 0 ? 0.0 : b[i - 1];
        if (!(root > left && root < b[i])) throw RootBracketError("mixture roots failed to interlace");
        // continuation of g' past the abscissa
        double gp = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) gp += a[j] * b[j] / ((b[j] - root) * (b[j] - root));
        const double slope = lambda * gp - c;
        if (!(slope > 0.0) || !std::isfinite(slope)) throw RootBracketError("mixture root has a degenerate slope");
        out.roots.push_back(root);
        out.coefficients.push_back(c * (1.0 - r) / slope);
    }
    return out;
}

double non_ruin_zero(const RiskSystem& sys, double t, const LatticeDistribution& aggregate) {
    if (!(t > 0.0)) throw DomainError("time must be positive");
    const double d = aggregate.span();
    const double ct = sys.premium() * t;
    if (ct / d < 10.0) throw GridError("span does not resolve c t (need c t / d >= 10)");
    const double q = ct / d;
    const auto n_max = static_cast<std::size_t>(std::floor(q + 1e-9 * q));
    if (n_max >= aggregate.size() && aggregate.remainder() > 1e-12)
        throw DomainError("aggregate distribution does not reach c t");
    double s = 0.0;
    for (std::size_t n = 0; n <= n_max && n < aggregate.size(); ++n)
        s += std::max(0.0, 1.0 - static_cast<double>(n) / q) * aggregate.mass(n);
    return s;
}

double seal(const RiskSystem& sys, double t, double span, SealOptions opts) {
    if (!(t > 0.0)) throw DomainError("time must be positive");
    if (!(span > 0.0)) throw DomainError("span must be positive");
    const double c = sys.premium();
    const double tau = opts.tau > 0.0 ? opts.tau : span / c;
    const std::size_t K = grid_index(c * tau, span, "premium per time step");
    const std::size_t J = grid_index(t, tau, "horizon");
    const std::size_t u_cells = grid_index(sys.capital(), span, "initial capital");
    if (K == 0 || J == 0) throw GridError("time step and horizon must be positive multiples");

    const double lambda = sys.model().lambda();
    const auto f = claim_lattice(sys.model().severity(), span, opts.tail_tol);

    auto aggregate = [&](std::size_t j, std::size_t n_out) {
        return panjer(lambda * static_cast<double>(j) * tau, f, std::max<std::size_t>(n_out, 1));
    };

    // rbar(0, j tau) and the mass of S(j tau) at u + c j tau
    std::vector<double> rbar(J + 1, 1.0), crossing(J + 1, 0.0);
    double first = 0.0;
    for (std::size_t j = 1; j <= J; ++j) {
        const std::size_t level = K * j;
        const auto agg = aggregate(j, u_cells + level);
        double s = 0.0;
        for (std::size_t n = 0; n <= level; ++n)
            s += (1.0 - static_cast<double>(n) / static_cast<double>(level)) * agg.mass(n);
        rbar[j] = s;
        crossing[j] = agg.mass(u_cells + level);
        if (j == J) first = agg.tail(u_cells + level);
    }
    double second = 0.0;
    for (std::size_t j = 1; j <= J; ++j) second += static_cast<double>(K) * crossing[j] * rbar[J - j];
    return std::clamp(first + second, 0.0, 1.0);
}

HittingBelow hitting_below(const RiskSystem& sys, double u, std::optional<double> t, double span, double tail_tol) {
    if (!(u > 0.0)) throw DomainError("level below must be positive");
    if (sys.loading_sign() == 0) throw LoadingError("zero safety loading");
    HittingBelow out{1.0, std::nullopt};
    if (sys.loading_sign() < 0) out.infinite = std::exp(lundberg(sys).R * u);
    if (!t) return out;

    const double c = sys.premium();
    if (!(*t > 0.0)) throw DomainError("time must be positive");
    const auto& sev = sys.model().severity();
    if (span <= 0.0) {
        if (!sev.is_lattice()) throw DomainError("a money span is needed for continuous severities");
        span = sev.lattice_span();
    }
    const auto f = claim_lattice(sev, span, tail_tol);
    const double lambda = sys.model().lambda();
    double s_sum = 0.0;
    if (c * *t >= u) {
        const auto m_max = static_cast<std::size_t>(std::floor((c * *t - u) / span + 1e-9));
        for (std::size_t m = 0; m <= m_max; ++m) {
            const double s = (static_cast<double>(m) * span + u) / c;
            const double mass = m == 0 ? std::exp(-lambda * s) : panjer(lambda * s, f, m).mass(m);
            s_sum += u / (c * s) * mass;
        }
    }
    out.finite = std::min(s_sum, out.infinite);
    return out;
}

FiniteTimeBound finite_time_bound(const RiskSystem& sys, double u, double t) {
    if (!(t > 0.0)) throw DomainError("time must be positive");
    if (!(u > 0.0)) throw DomainError("capital must be positive");
    if (sys.loading_sign() == 0) throw LoadingError("zero safety loading");
    const double c = sys.premium();
    const auto sol = lundberg(sys);
    double arg;
    if (sys.loading_sign() > 0) {
        arg = c + 1.0 / t;
    } else {
        if (!(t > 1.0 / c)) throw DomainError("need t > 1/c on the hitting-below branch");
        arg = c - 1.0 / t;
    }
    const double H = t * entropy(sys.model(), arg).h;
    return {H, std::exp(-u * H), t <= sol.tbar ? TimeSide::early : TimeSide::late, sol.tbar, std::abs(sol.R)};
}

RuinTimeClt ruin_time_clt(const RiskSystem& sys, double u, double x) {
    require_positive_loading(sys);
    if (!(u >= 0.0)) throw DomainError("capital must be nonnegative");
    const auto sol = lundberg(sys);
    const double tb = sol.tbar;
    return {sol.C * std::exp(-sol.R * u) * normal_cdf(x), u * tb, u * tb * tb * tb * sol.sigma2};
}

CompositeSplit composite_split(const CompoundModel& m1, const CompoundModel& m2, double R, double Tbar) {
    if (!(R > 0.0)) throw DomainError("shared exponent must be positive");
    if (!(Tbar > 0.0)) throw DomainError("shared time scale must be positive");
    if (!(R < std::min(m1.abscissa(), m2.abscissa()))) throw DomainError("shared exponent beyond an abscissa");
    CompositeSplit s{};
    s.c1 = m1.g(R) / R;
    s.c2 = m2.g(R) / R;
    s.u1 = Tbar * (m1.g_prime(R) - s.c1);
    s.u2 = Tbar * (m2.g_prime(R) - s.c2);
    s.c = s.c1 + s.c2;
    s.u = s.u1 + s.u2;

    const PooledCumulant pooled({m1, m2});
    const auto sol = lundberg(pooled, s.c);
    s.pooled_R = sol.R;
    s.pooled_u = Tbar * (pooled.g_prime(R) - s.c);
    s.C = sol.C;
    s.C1 = lundberg(m1, s.c1).C;
    s.C2 = lundberg(m2, s.c2).C;
    s.pooled = s.C * std::exp(-R * s.u);
    s.product = s.C1 * std::exp(-R * s.u1) * s.C2 * std::exp(-R * s.u2);
    s.constant_ratio = s.C1 * s.C2 / s.C;
    const double slack = 1e-12 * std::max(s.C1, s.C2);
    s.comparable = std::min(s.C1, s.C2) - slack <= s.constant_ratio && s.constant_ratio <= std::max(s.C1, s.C2) + slack;
    return s;
}

}  // namespace cramer
