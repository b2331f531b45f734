#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "cramer/lattice_distribution.hpp"

namespace cramer {

struct Exponential {
    double rate;
};

// Unit scale on input; tilting keeps the shape and shrinks the support, which
// is tracked in `scale`.
struct Gamma {
    double shape;
    double scale = 1.0;
};

struct PointMass {
    double location;
};

struct ExponentialMixture {
    std::vector<double> weights;
    std::vector<double> rates;  // strictly increasing
};

// masses[i] sits at (i + 1) * span
struct LatticeSeverity {
    double span;
    std::vector<double> masses;
};

inline constexpr double default_tail_tol = 1e-10;

class SeverityModel {
public:
    using Variant = std::variant<Exponential, Gamma, PointMass, ExponentialMixture, LatticeSeverity>;

    static SeverityModel exponential(double rate);
    static SeverityModel gamma(double shape, double scale = 1.0);
    static SeverityModel point_mass(double location);
    static SeverityModel mixture(std::vector<double> weights, std::vector<double> rates);
    static SeverityModel lattice(double span, std::vector<double> masses);
    // Lattice severity from a distribution on {0, d, ...}; the mass at 0 must vanish.
    static SeverityModel lattice(const LatticeDistribution& dist);

    const Variant& variant() const noexcept { return v_; }
    std::string name() const;

    double abscissa() const noexcept;  // +inf when f is entire
    bool is_lattice() const noexcept;
    double lattice_span() const;  // throws for continuous variants

    double mgf(double xi) const;
    double mgf_minus_one(double xi) const;  // f(xi) - 1 without cancellation near 0
    double mgf_prime(double xi) const;
    double mgf_second(double xi) const;

    double moment(int k) const;
    double mean() const { return moment(1); }
    double second_moment() const { return moment(2); }

    double cdf(double x) const;
    double survival(double x) const;  // P(X > x)
    // Smallest x with survival(x) <= tol (support maximum for bounded laws).
    double quantile_tail(double tol) const;

    SeverityModel tilt(double a) const;

private:
    explicit SeverityModel(Variant v) : v_(std::move(v)) {}
    void check_xi(double xi) const;
    Variant v_;
};

struct DiscretizeOptions {
    double tail_tol = default_tail_tol;
    bool force = false;  // allow dropping more than tail_tol into the last cell
};

// f_n = P((n-1)d < X <= nd), n = 1..n_max, residual tail added to f_{n_max}.
// Index 0 of the returned lattice carries zero mass.
LatticeDistribution discretize(const SeverityModel& m, double span, std::size_t n_max,
                               DiscretizeOptions opts = {});
// k_n = (d/mu_d) sum_{m>=n} f_m with mu_d = d sum_{n>=0} (1 - F_n).
LatticeDistribution discretize_ladder(const SeverityModel& m, double span, std::size_t n_max,
                                      DiscretizeOptions opts = {});
// Cell count covering all but tail_tol of the mass.
std::size_t cells_for_tail(const SeverityModel& m, double span, double tail_tol = default_tail_tol);

}  // namespace cramer
