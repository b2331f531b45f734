#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "cramer/cumulant.hpp"
#include "cramer/lattice_distribution.hpp"
#include "cramer/severity.hpp"

namespace cramer {

class RiskSystem {
public:
    RiskSystem(CompoundModel model, double premium, double capital = 0.0);

    const CompoundModel& model() const noexcept { return model_; }
    double premium() const noexcept { return c_; }
    double capital() const noexcept { return u_; }
    // sign(c - lambda mu)
    int loading_sign() const noexcept { return loading_; }
    RiskSystem with_capital(double u) const { return RiskSystem(model_, c_, u); }

private:
    CompoundModel model_;
    double c_;
    double u_;
    int loading_;
};

struct LadderLaw {
    double r;               // lambda mu / c
    SeverityModel claims;   // ladder heights have density (1 - F(u)) / mu
    double density(double u) const { return claims.survival(u) / claims.mean(); }
    LatticeDistribution discretize(double span, std::size_t n_max, DiscretizeOptions opts = {}) const {
        return discretize_ladder(claims, span, n_max, opts);
    }
};

LadderLaw ladder(const RiskSystem& sys);

// r(u) on the grid u = m d, m = 0..M.
class RuinCurve {
public:
    RuinCurve(double span, std::vector<double> values) : span_(span), values_(std::move(values)) {}
    double span() const noexcept { return span_; }
    const std::vector<double>& values() const noexcept { return values_; }
    // Value at the grid point nearest below u (u must lie on the grid up to rounding).
    double at(double u) const;

private:
    double span_;
    std::vector<double> values_;
};

struct RuinPanjerOptions {
    double tail_tol = default_tail_tol;
};

// Ladder heights discretized on span d, compound geometric recursion;
// r(m d) = P(lattice max > m d).
RuinCurve ruin_panjer(const RiskSystem& sys, double span, double u_max, RuinPanjerOptions opts = {});

struct LundbergSolution {
    double R;
    double C;
    double tbar;
    double sigma2;
};

// Nonzero root of g(a) = c a on the branch selected by the loading sign.
LundbergSolution lundberg(const Cumulant& model, double c);
LundbergSolution lundberg(const RiskSystem& sys);

struct CramerLundberg {
    double approximation;  // C e^{-Ru}
    double bound;          // e^{-Ru}
};

CramerLundberg cramer_lundberg_approx(const RiskSystem& sys);
CramerLundberg cramer_lundberg_approx(const RiskSystem& sys, double u);

struct SeriesExpansion {
    double R1;
    double R2;
    double C1;
};

SeriesExpansion lundberg_series(double mu1, double mu2, double mu3, double rho);

struct MixtureRuin {
    std::vector<double> roots;
    std::vector<double> coefficients;
    double total(double u) const;
    double dominant(double u) const;
};

MixtureRuin mixture_exact(const RiskSystem& sys);

// rbar(0,t) from the lattice law of S(t).
double non_ruin_zero(const RiskSystem& sys, double t, const LatticeDistribution& aggregate);

struct SealOptions {
    double tau = 0.0;  // time step; 0 means d / c
    double tail_tol = default_tail_tol;
};

// Finite-time ruin probability r(u, t) with u = sys.capital(), on a money
// lattice of span d and time grid s_j = j tau with c tau a multiple of d.
double seal(const RiskSystem& sys, double t, double span, SealOptions opts = {});

struct HittingBelow {
    double infinite;               // r(-u)
    std::optional<double> finite;  // r(-u, t)
};

HittingBelow hitting_below(const RiskSystem& sys, double u, std::optional<double> t = std::nullopt,
                           double span = 0.0, double tail_tol = default_tail_tol);

enum class TimeSide { early, late };

struct FiniteTimeBound {
    double H;       // t h(c +- 1/t)
    double bound;   // e^{-u H}
    TimeSide side;
    double tbar;
    double R;       // |R|, equal to H(tbar)
};

FiniteTimeBound finite_time_bound(const RiskSystem& sys, double u, double t);

struct RuinTimeClt {
    double probability;  // C e^{-Ru} Phi(x)
    double mean;         // u tbar
    double variance;     // u tbar^3 sigma^2
};

RuinTimeClt ruin_time_clt(const RiskSystem& sys, double u, double x);

struct CompositeSplit {
    double c1, c2, u1, u2;
    double c, u;                 // pooled premium and capital
    double pooled_R;             // root of the pooled model at premium c
    double pooled_u;             // Tbar (g'(R) - c) of the pooled model
    double C, C1, C2;
    double pooled;               // C e^{-Ru}
    double product;              // C1 e^{-R u1} C2 e^{-R u2}
    double constant_ratio;       // C1 C2 / C
    bool comparable;             // ratio lies between C1 and C2
};

CompositeSplit composite_split(const CompoundModel& m1, const CompoundModel& m2, double R, double Tbar);

}  // namespace cramer
