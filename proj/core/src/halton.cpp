#include "bridge/halton.hpp"

#include <stdexcept>

namespace bridge::uq {

namespace {
constexpr int kPrimes[] = {
    2,   3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,  43,  47,  53,
    59,  61,  67,  71,  73,  79,  83,  89,  97,  101, 103, 107, 109, 113, 127, 131,
    137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223,
    227, 229, 233, 239, 241, 251, 257, 263, 269, 271, 277, 281, 283, 293, 307, 311};
}

int nth_prime(int i) {
  if (i < 0 || i >= static_cast<int>(std::size(kPrimes)))
    throw std::out_of_range("halton dimension limited to 64");
  return kPrimes[i];
}

double radical_inverse(int base, std::size_t k) {
  double inv_base = 1.0 / base;
  double scale = inv_base;
  double result = 0.0;
  while (k > 0) {
    result += static_cast<double>(k % base) * scale;
    k /= base;
    scale *= inv_base;
  }
  return result;
}

std::vector<double> halton_point(std::size_t index, int dim) {
  std::vector<double> point(dim);
  for (int i = 0; i < dim; ++i) point[i] = radical_inverse(nth_prime(i), index);
  return point;
}

std::vector<std::vector<double>> halton_sequence(std::size_t n, int dim) {
  std::vector<std::vector<double>> points;
  points.reserve(n);
  for (std::size_t k = 1; k <= n; ++k) points.push_back(halton_point(k, dim));
  return points;
}

}  // namespace bridge::uq
