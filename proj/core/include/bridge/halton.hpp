#pragma once

#include <cstddef>
#include <vector>

namespace bridge::uq {

/// Van der Corput radical inverse of k in the given base.
double radical_inverse(int base, std::size_t k);

/// k-th Halton point in [0,1)^dim; component i uses the i-th prime base.
/// Index 0 is the origin, which callers normally skip.
std::vector<double> halton_point(std::size_t index, int dim);

/// First n Halton points with the origin skipped (indices 1..n).
std::vector<std::vector<double>> halton_sequence(std::size_t n, int dim);

/// i-th prime (0 -> 2, 1 -> 3, ...); supports the first 64 dimensions.
int nth_prime(int i);

}  // namespace bridge::uq
