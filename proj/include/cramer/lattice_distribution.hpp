#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace cramer {

// Probability masses g_0, g_1, ... on {0, d, 2d, ...} plus the mass left
// beyond the stored range. Tails G_m = P(> m d) follow G_m = G_{m-1} - g_m
// from G_{-1} = 1, clamped at zero.
class LatticeDistribution {
public:
    LatticeDistribution(double span, std::vector<double> masses, double remainder = 0.0);

    double span() const noexcept { return span_; }
    std::size_t size() const noexcept { return masses_.size(); }
    std::span<const double> masses() const noexcept { return masses_; }
    std::span<const double> tails() const noexcept { return tails_; }
    double remainder() const noexcept { return remainder_; }

    double mass(std::size_t n) const noexcept { return n < masses_.size() ? masses_[n] : 0.0; }
    // P(X > m d); beyond the stored range only the remainder is known.
    double tail(std::size_t m) const noexcept {
        return m < tails_.size() ? tails_[m] : remainder_;
    }
    // P(X >= n d)
    double at_least(std::size_t n) const noexcept { return n == 0 ? 1.0 : tail(n - 1); }

    double total_mass() const noexcept;
    double mean() const noexcept;
    double variance() const noexcept;

private:
    double span_;
    std::vector<double> masses_;
    std::vector<double> tails_;
    double remainder_;
};

// Header "# lattice span=<d> remainder=<r> size=<n>" then "<n*d> <mass>" rows.
// Values are written in shortest round-trip form, so read(write(x)) == x.
void write_lattice(std::ostream& os, const LatticeDistribution& dist);
LatticeDistribution read_lattice(std::istream& is);

}  // namespace cramer
