#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "cramer/severity.hpp"

namespace cramer {

// Anything with a cumulant function g on (-inf, abscissa).
class Cumulant {
public:
    virtual ~Cumulant() = default;
    virtual double g(double xi) const = 0;
    virtual double g_prime(double xi) const = 0;
    virtual double g_second(double xi) const = 0;
    virtual double abscissa() const = 0;
    virtual double mean_rate() const { return g_prime(0.0); }
};

class CompoundModel final : public Cumulant {
public:
    CompoundModel(double lambda, SeverityModel severity);

    double lambda() const noexcept { return lambda_; }
    const SeverityModel& severity() const noexcept { return severity_; }

    double g(double xi) const override { return lambda_ * severity_.mgf_minus_one(xi); }
    double g_prime(double xi) const override { return lambda_ * severity_.mgf_prime(xi); }
    double g_second(double xi) const override { return lambda_ * severity_.mgf_second(xi); }
    double abscissa() const override { return severity_.abscissa(); }
    double mean_rate() const override { return lambda_ * severity_.mean(); }

    // Esscher transform of the whole process: intensity lambda f(a), tilted claims.
    CompoundModel tilt(double a) const;

private:
    double lambda_;
    SeverityModel severity_;
};

// Independent superposition: g = sum of the parts.
class PooledCumulant final : public Cumulant {
public:
    explicit PooledCumulant(std::vector<CompoundModel> parts);
    const std::vector<CompoundModel>& parts() const noexcept { return parts_; }
    double g(double xi) const override;
    double g_prime(double xi) const override;
    double g_second(double xi) const override;
    double abscissa() const override;
    double mean_rate() const override;

private:
    std::vector<CompoundModel> parts_;
};

struct EntropyPoint {
    double x;   // level
    double xi;  // g'(xi) = x
    double h;   // x xi - g(xi)
};

EntropyPoint entropy(const Cumulant& model, double x);

enum class TailSide { upper, lower };

struct ChernoffBound {
    double bound;
    TailSide side;
    EntropyPoint point;
};

// e^{-t h(x)}: bounds P(S(t) >= tx) for x >= mean rate, P(S(t) <= tx) below it.
ChernoffBound chernoff_bound(const Cumulant& model, double t, double x);

// e^{s^2/2} (1 - Phi(s))
double esscher_function(double s);
// sum_{n>=0} e^{-sn} phi(nb) b
double esscher_function_discrete(double s, double b);

struct EsscherTail {
    double canonical;     // continuous: e^{-th} E(a sigma); lattice: modified form with A(d)
    double alternative;   // continuous: e^{-th}/(sqrt(2 pi) a sigma); lattice: e^{-th} E(ad, d/sigma)
    double tilt;          // a
    double sigma;         // sqrt(t g''(a))
    double entropy;       // h(x)
    double prefactor;     // a, or A(d) in the lattice case
    bool low_quality;     // a sigma < 1: central-limit regime, approximation unreliable
};

EsscherTail esscher_tail(const CompoundModel& model, double t, double x);
EsscherTail esscher_tail_lattice(const CompoundModel& model, double t, double x);

// Smallest n with n d / t above the mean rate and e^{-t h(n d / t)} < eps.
std::size_t suggest_n_out(const Cumulant& model, double t, double span, double eps = 1e-12);

struct Policy {
    double sum_at_risk;
    double probability;
};
using Portfolio = std::vector<Policy>;

struct PortfolioCompound {
    CompoundModel model;
    std::vector<std::pair<double, double>> atoms;  // (x, lambda_i / lambda), merged, sorted
    double sum_p_squared;
    bool degenerate;  // some p_i > 0.99
};

PortfolioCompound portfolio_to_compound(const Portfolio& portfolio);

inline constexpr std::size_t max_exact_policies = 25;

// Law of sum x_i M_i as sorted (value, probability) atoms, by convolving
// the two-point laws; throws SizeError above max_exact_policies.
std::vector<std::pair<double, double>> portfolio_distribution(const Portfolio& portfolio);
// Exact P(sum x_i M_i > x).
double portfolio_exact_tail(const Portfolio& portfolio, double x);

}  // namespace cramer
