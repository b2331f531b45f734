#include "cramer/severity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "cramer/errors.hpp"

namespace cramer {
namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double factorial(int k) {
    double r = 1.0;
    for (int i = 2; i <= k; ++i) r *= i;
    return r;
}

// Cell of an atom at x on a lattice of span d: the n with (n-1)d < x <= nd,
// tolerant to rounding when x is meant to be a lattice point.
std::size_t atom_cell(double x, double d) {
    const double q = x / d;
    const double n = std::ceil(q - 1e-9 * std::max(1.0, q));
    return static_cast<std::size_t>(std::max(1.0, n));
}

}  // namespace

SeverityModel SeverityModel::exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw DomainError("exponential rate must be positive");
    return SeverityModel(Exponential{rate});
}

SeverityModel SeverityModel::gamma(double shape, double scale) {
    if (!(shape > 0.0) || !std::isfinite(shape)) throw DomainError("gamma shape must be positive");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("gamma scale must be positive");
    return SeverityModel(Gamma{shape, scale});
}

SeverityModel SeverityModel::point_mass(double location) {
    if (!(location > 0.0) || !std::isfinite(location)) throw DomainError("point mass location must be positive");
    return SeverityModel(PointMass{location});
}

SeverityModel SeverityModel::mixture(std::vector<double> weights, std::vector<double> rates) {
    if (weights.empty() || weights.size() != rates.size())
        throw DomainError("mixture needs matching, nonempty weights and rates");
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] > 0.0)) throw DomainError("mixture weights must be positive");
        if (!(rates[i] > 0.0) || !std::isfinite(rates[i])) throw DomainError("mixture rates must be positive");
        if (i > 0 && !(rates[i] > rates[i - 1])) throw DomainError("mixture rates must be strictly increasing");
        total += weights[i];
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("mixture weights must sum to 1");
    return SeverityModel(ExponentialMixture{std::move(weights), std::move(rates)});
}

SeverityModel SeverityModel::lattice(double span, std::vector<double> masses) {
    if (!(span > 0.0) || !std::isfinite(span)) throw DomainError("lattice span must be positive");
    if (masses.empty()) throw DomainError("lattice severity needs masses");
    double total = 0.0;
    for (double f : masses) {
        if (!(f >= 0.0) || !std::isfinite(f)) throw DomainError("lattice masses must be nonnegative");
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("lattice masses must sum to 1");
    while (masses.size() > 1 && masses.back() == 0.0) masses.pop_back();
    return SeverityModel(LatticeSeverity{span, std::move(masses)});
}

SeverityModel SeverityModel::lattice(const LatticeDistribution& dist) {
    if (dist.mass(0) != 0.0) throw DomainError("claim sizes must be strictly positive");
    if (dist.remainder() > 1e-12) throw DomainError("lattice severity has truncated mass");
    const auto m = dist.masses();
    return lattice(dist.span(), std::vector<double>(m.begin() + 1, m.end()));
}

std::string SeverityModel::name() const {
    std::ostringstream os;
    os.precision(12);
    std::visit(overloaded{
                   [&](const Exponential& e) { os << "exponential(rate=" << e.rate << ")"; },
                   [&](const Gamma& g) { os << "gamma(shape=" << g.shape << ", scale=" << g.scale << ")"; },
                   [&](const PointMass& p) { os << "point_mass(" << p.location << ")"; },
                   [&](const ExponentialMixture& m) { os << "mixture(" << m.rates.size() << " components)"; },
                   [&](const LatticeSeverity& l) {
                       os << "lattice(span=" << l.span << ", " << l.masses.size() << " masses)";
                   },
               },
               v_);
    return os.str();
}

double SeverityModel::abscissa() const noexcept {
    return std::visit(overloaded{
                          [](const Exponential& e) { return e.rate; },
                          [](const Gamma& g) { return 1.0 / g.scale; },
                          [](const PointMass&) { return inf; },
                          [](const ExponentialMixture& m) { return m.rates.front(); },
                          [](const LatticeSeverity&) { return inf; },
                      },
                      v_);
}

bool SeverityModel::is_lattice() const noexcept {
    return std::holds_alternative<PointMass>(v_) || std::holds_alternative<LatticeSeverity>(v_);
}

double SeverityModel::lattice_span() const {
    if (const auto* p = std::get_if<PointMass>(&v_)) return p->location;
    if (const auto* l = std::get_if<LatticeSeverity>(&v_)) return l->span;
    throw DomainError("severity is not a lattice distribution");
}

void SeverityModel::check_xi(double xi) const {
    if (std::isnan(xi) || xi >= abscissa()) throw DomainError("argument beyond the convergence abscissa");
}

double SeverityModel::mgf(double xi) const {
    check_xi(xi);
    return std::visit(overloaded{
                          [&](const Exponential& e) { return e.rate / (e.rate - xi); },
                          [&](const Gamma& g) { return std::pow(1.0 - g.scale * xi, -g.shape); },
                          [&](const PointMass& p) { return std::exp(xi * p.location); },
                          [&](const ExponentialMixture& m) {
                              double s = 0.0;
                              for (std::size_t i = 0; i < m.rates.size(); ++i)
                                  s += m.weights[i] * m.rates[i] / (m.rates[i] - xi);
                              return s;
                          },
                          [&](const LatticeSeverity& l) {
                              double s = 0.0;
                              for (std::size_t i = 0; i < l.masses.size(); ++i)
                                  s += l.masses[i] * std::exp(xi * l.span * static_cast<double>(i + 1));
                              return s;
                          },
                      },
                      v_);
}

double SeverityModel::mgf_minus_one(double xi) const {
    check_xi(xi);
    return std::visit(overloaded{
                          [&](const Exponential& e) { return xi / (e.rate - xi); },
                          [&](const Gamma& g) { return std::expm1(-g.shape * std::log1p(-g.scale * xi)); },
                          [&](const PointMass& p) { return std::expm1(xi * p.location); },
                          [&](const ExponentialMixture& m) {
                              double s = 0.0;
                              for (std::size_t i = 0; i < m.rates.size(); ++i)
                                  s += m.weights[i] * xi / (m.rates[i] - xi);
                              return s;
                          },
                          [&](const LatticeSeverity& l) {
                              double s = 0.0;
                              for (std::size_t i = 0; i < l.masses.size(); ++i)
                                  s += l.masses[i] * std::expm1(xi * l.span * static_cast<double>(i + 1));
                              return s;
                          },
                      },
                      v_);
}

double SeverityModel::mgf_prime(double xi) const {
    check_xi(xi);
    return std::visit(overloaded{
                          [&](const Exponential& e) {
                              const double q = e.rate - xi;
                              return e.rate / (q * q);
                          },
                          [&](const Gamma& g) {
                              return g.shape * g.scale * std::pow(1.0 - g.scale * xi, -g.shape - 1.0);
                          },
                          [&](const PointMass& p) { return p.location * std::exp(xi * p.location); },
                          [&](const ExponentialMixture& m) {
                              double s = 0.0;
                              for (std::size_t i = 0; i < m.rates.size(); ++i) {
                                  const double q = m.rates[i] - xi;
                                  s += m.weights[i] * m.rates[i] / (q * q);
                              }
                              return s;
                          },
                          [&](const LatticeSeverity& l) {
                              double s = 0.0;
                              for (std::size_t i = 0; i < l.masses.size(); ++i) {
                                  const double x = l.span * static_cast<double>(i + 1);
                                  s += l.masses[i] * x * std::exp(xi * x);
                              }
                              return s;
                          },
                      },
                      v_);
}

double SeverityModel::mgf_second(double xi) const {
    check_xi(xi);
    return std::visit(overloaded{
                          [&](const Exponential& e) {
                              const double q = e.rate - xi;
                              return 2.0 * e.rate / (q * q * q);
                          },
                          [&](const Gamma& g) {
                              return g.shape * (g.shape + 1.0) * g.scale * g.scale *
                                     std::pow(1.0 - g.scale * xi, -g.shape - 2.0);
                          },
                          [&](const PointMass& p) {
                              return p.location * p.location * std::exp(xi * p.location);
                          },
                          [&](const ExponentialMixture& m) {
                              double s = 0.0;
                              for (std::size_t i = 0; i < m.rates.size(); ++i) {
                                  const double q = m.rates[i] - xi;
                                  s += 2.0 * m.weights[i] * m.rates[i] / (q * q * q);
                              }
                              return s;
                          },
                          [&](const LatticeSeverity& l) {
                              double s = 0.0;
                              for (std::size_t i = 0; i < l.masses.size(); ++i) {
                                  const double x = l.span * static_cast<double>(i + 1);
                                  s += l.masses[i] * x * x * std::exp(xi * x);
                              }
                              return s;
                          },
                      },
                      v_);
}

double SeverityModel::moment(int k) const {
    if (k < 1) throw DomainError("moment order must be at least 1");
    return std::visit(overloaded{
                          [&](const Exponential& e) { return factorial(k) / std::pow(e.rate, k); },
                          [&](const Gamma& g) {
                              double r = 1.0;
                              for (int i = 0; i < k; ++i) r *= (g.shape + i) * g.scale;
                              return r;
                          },
                          [&](const PointMass& p) { return std::pow(p.location, k); },
                          [&](const ExponentialMixture& m) {
                              double s = 0.0;
                              for (std::size_t i = 0; i < m.rates.size(); ++i)
                                  s += m.weights[i] / std::pow(m.rates[i], k);
                              return s * factorial(k);
                          },
                          [&](const LatticeSeverity& l) {
                              double s = 0.0;
                              for (std::size_t i = 0; i < l.masses.size(); ++i)
                                  s += l.masses[i] * std::pow(l.span * static_cast<double>(i + 1), k);
                              return s;
                          },
                      },
                      v_);
}

double SeverityModel::survival(double x) const {
    if (x < 0.0) return 1.0;
    return std::visit(overloaded{
                          [&](const Exponential& e) { return std::exp(-e.rate * x); },
                          [&](const Gamma& g) { return boost::math::gamma_q(g.shape, x / g.scale); },
                          [&](const PointMass& p) { return x < p.location ? 1.0 : 0.0; },
                          [&](const ExponentialMixture& m) {
                              double s = 0.0;
                              for (std::size_t i = 0; i < m.rates.size(); ++i)
                                  s += m.weights[i] * std::exp(-m.rates[i] * x);
                              return s;
                          },
                          [&](const LatticeSeverity& l) {
                              double s = 0.0;
                              for (std::size_t i = l.masses.size(); i-- > 0;) {
                                  if (l.span * static_cast<double>(i + 1) <= x) break;
                                  s += l.masses[i];
                              }
                              return s;
                          },
                      },
                      v_);
}

double SeverityModel::cdf(double x) const {
    if (x < 0.0) return 0.0;
    if (const auto* g = std::get_if<Gamma>(&v_)) return boost::math::gamma_p(g->shape, x / g->scale);
    return 1.0 - survival(x);
}

double SeverityModel::quantile_tail(double tol) const {
    if (!(tol > 0.0 && tol < 1.0)) throw DomainError("tail tolerance must lie in (0, 1)");
    if (const auto* e = std::get_if<Exponential>(&v_)) return -std::log(tol) / e->rate;
    if (const auto* p = std::get_if<PointMass>(&v_)) return p->location;
    if (const auto* l = std::get_if<LatticeSeverity>(&v_)) return l->span * static_cast<double>(l->masses.size());
    double hi = std::max(mean(), 1e-300);
    while (survival(hi) > tol) hi *= 2.0;
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (survival(mid) > tol ? lo : hi) = mid;
    }
    return hi;
}

SeverityModel SeverityModel::tilt(double a) const {
    check_xi(a);
    return std::visit(
        overloaded{
            [&](const Exponential& e) { return SeverityModel(Exponential{e.rate - a}); },
            [&](const Gamma& g) { return SeverityModel(Gamma{g.shape, g.scale / (1.0 - g.scale * a)}); },
            [&](const PointMass& p) { return SeverityModel(p); },
            [&](const ExponentialMixture& m) {
                ExponentialMixture out;
                const std::size_t n = m.rates.size();
                out.weights.resize(n);
                out.rates.resize(n);
                double total = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    out.rates[i] = m.rates[i] - a;
                    out.weights[i] = m.weights[i] * m.rates[i] / out.rates[i];
                    total += out.weights[i];
                }
                for (double& w : out.weights) w /= total;
                return SeverityModel(std::move(out));
            },
            [&](const LatticeSeverity& l) {
                LatticeSeverity out{l.span, std::vector<double>(l.masses.size(), 0.0)};
                double top = -inf;
                for (std::size_t i = 0; i < l.masses.size(); ++i)
                    if (l.masses[i] > 0.0) top = std::max(top, a * l.span * static_cast<double>(i + 1));
                double total = 0.0;
                for (std::size_t i = 0; i < l.masses.size(); ++i) {
                    if (l.masses[i] == 0.0) continue;
                    out.masses[i] = l.masses[i] * std::exp(a * l.span * static_cast<double>(i + 1) - top);
                    total += out.masses[i];
                }
                for (double& f : out.masses) f /= total;
                return SeverityModel(std::move(out));
            },
        },
        v_);
}

std::size_t cells_for_tail(const SeverityModel& m, double span, double tail_tol) {
    if (!(span > 0.0)) throw DomainError("span must be positive");
    if (m.is_lattice()) return atom_cell(m.quantile_tail(tail_tol), span);
    const double x = m.quantile_tail(tail_tol);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(x / span)));
}

LatticeDistribution discretize(const SeverityModel& m, double span, std::size_t n_max, DiscretizeOptions opts) {
    if (!(span > 0.0) || !std::isfinite(span)) throw DomainError("span must be positive");
    if (n_max < 1) throw DomainError("need at least one cell");
    std::vector<double> f(n_max + 1, 0.0);
    double tail = 0.0;

    auto place_atom = [&](double x, double mass) {
        const std::size_t n = atom_cell(x, span);
        if (n <= n_max) {
            f[n] += mass;
        } else {
            tail += mass;
        }
    };

    const auto& v = m.variant();
    if (const auto* p = std::get_if<PointMass>(&v)) {
        place_atom(p->location, 1.0);
    } else if (const auto* l = std::get_if<LatticeSeverity>(&v)) {
        for (std::size_t i = 0; i < l->masses.size(); ++i)
            if (l->masses[i] > 0.0) place_atom(l->span * static_cast<double>(i + 1), l->masses[i]);
    } else {
        double prev = 1.0;  // survival at 0
        for (std::size_t n = 1; n <= n_max; ++n) {
            const double s = m.survival(static_cast<double>(n) * span);
            f[n] = std::max(0.0, prev - s);
            prev = s;
        }
        tail = prev;
    }

    if (tail > opts.tail_tol && !opts.force) {
        std::ostringstream os;
        os << "discretization drops tail mass " << tail << " beyond " << static_cast<double>(n_max) * span;
        throw TailError(os.str(), tail);
    }
    f[n_max] += tail;
    return LatticeDistribution(span, std::move(f));
}

LatticeDistribution discretize_ladder(const SeverityModel& m, double span, std::size_t n_max,
                                      DiscretizeOptions opts) {
    const auto f = discretize(m, span, n_max, opts);
    const auto masses = f.masses();
    const std::size_t n_top = masses.size() - 1;
    // suffix[n] = sum_{m >= n} f_m = 1 - F_{n-1}
    std::vector<double> suffix(n_top + 2, 0.0);
    for (std::size_t n = n_top + 1; n-- > 1;) suffix[n] = suffix[n + 1] + masses[n];
    double mu_d = 0.0;
    for (std::size_t n = 1; n <= n_top; ++n) mu_d += suffix[n];
    mu_d *= span;

    std::vector<double> k(n_top + 1, 0.0);
    for (std::size_t n = 1; n <= n_top; ++n) k[n] = span / mu_d * suffix[n];
    return LatticeDistribution(span, std::move(k));
}

}  // namespace cramer
