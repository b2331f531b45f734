#pragma once

#include <cstddef>

#include "cramer/lattice_distribution.hpp"

namespace cramer {

// Compound Poisson masses g_0..g_{n_out} for Poisson(rate) counts and claim
// masses f (f_0 must vanish). Above rate ~700 the seed e^{-rate} underflows;
// the recursion then runs on a rescaled mantissa and emits a warning.
LatticeDistribution panjer(double rate, const LatticeDistribution& severity, std::size_t n_out);

// l_0 = 1 - r, l_n = r sum_{m=1}^n k_m l_{n-m}. The running tails
// r_n = P(>= n d) are available through at_least(n).
LatticeDistribution compound_geometric(double r, const LatticeDistribution& ladder, std::size_t n_out);

}  // namespace cramer
