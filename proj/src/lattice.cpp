#include "cramer/lattice.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "cramer/diagnostics.hpp"
#include "cramer/errors.hpp"

namespace cramer {
namespace {

std::vector<double> claim_masses(const LatticeDistribution& dist, const char* what) {
    const auto m = dist.masses();
    if (m[0] != 0.0) throw DomainError(std::string(what) + " must put no mass at 0");
    std::vector<double> f(m.begin(), m.end());
    double total = 0.0;
    for (double x : f) total += x;
    if (!(total > 0.0)) throw DomainError(std::string(what) + " has no mass");
    if (std::abs(total - 1.0) > 1e-12) {
        std::ostringstream os;
        os.precision(17);
        os << what << " masses sum to " << total << "; renormalizing";
        warn(os.str());
        for (double& x : f) x /= total;
    }
    while (f.size() > 2 && f.back() == 0.0) f.pop_back();
    return f;
}

}  // namespace

LatticeDistribution panjer(double rate, const LatticeDistribution& severity, std::size_t n_out) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw DomainError("Poisson rate must be positive");
    if (n_out < 1) throw DomainError("n_out must be at least 1");
    const auto f = claim_masses(severity, "severity");
    const std::size_t top = f.size() - 1;

    std::vector<double> g(n_out + 1, 0.0);
    if (rate <= 700.0) {
        g[0] = std::exp(-rate);
        for (std::size_t n = 1; n <= n_out; ++n) {
            double s = 0.0;
            const std::size_t xmax = std::min(n, top);
            for (std::size_t x = 1; x <= xmax; ++x) s += static_cast<double>(x) * f[x] * g[n - x];
            g[n] = rate * s / static_cast<double>(n);
        }
    } else {
        std::ostringstream os;
        os << "Panjer seed exp(-" << rate << ") underflows; using rescaled recursion";
        warn(os.str());
        // g_n = mant_n * exp(log_scale); mantissas rescaled when they grow large
        constexpr double big = 1e250;
        double log_scale = -rate;
        g[0] = 1.0;
        for (std::size_t n = 1; n <= n_out; ++n) {
            double s = 0.0;
            const std::size_t xmax = std::min(n, top);
            for (std::size_t x = 1; x <= xmax; ++x) s += static_cast<double>(x) * f[x] * g[n - x];
            g[n] = rate * s / static_cast<double>(n);
            if (g[n] > big) {
                for (std::size_t m = 0; m <= n; ++m) g[m] /= big;
                log_scale += std::log(big);
            }
        }
        for (double& x : g) x = x == 0.0 ? 0.0 : std::exp(std::log(x) + log_scale);
    }

    double tail = 1.0;
    for (double x : g) tail = std::max(0.0, tail - x);
    return LatticeDistribution(severity.span(), std::move(g), tail);
}

LatticeDistribution compound_geometric(double r, const LatticeDistribution& ladder, std::size_t n_out) {
    if (!(r > 0.0 && r < 1.0)) throw DomainError("upcrossing probability must lie in (0, 1)");
    if (n_out < 1) throw DomainError("n_out must be at least 1");
    const auto k = claim_masses(ladder, "ladder height");
    const std::size_t top = k.size() - 1;

    std::vector<double> l(n_out + 1, 0.0);
    l[0] = 1.0 - r;
    for (std::size_t n = 1; n <= n_out; ++n) {
        double s = 0.0;
        const std::size_t mmax = std::min(n, top);
        for (std::size_t m = 1; m <= mmax; ++m) s += k[m] * l[n - m];
        l[n] = r * s;
    }
    double tail = 1.0;
    for (double x : l) tail = std::max(0.0, tail - x);
    return LatticeDistribution(ladder.span(), std::move(l), tail);
}

}  // namespace cramer
