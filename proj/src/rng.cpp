#include "slda/rng.hpp"

#include <cmath>

namespace slda {

double normal_sample(Rng& rng) {
  // Box-Muller; one value per call keeps the engine state independent of
  // caller interleaving.
  double u1 = canonical_open(rng);
  double u2 = canonical_open(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

double gamma_sample(Rng& rng, double shape) {
  // Marsaglia-Tsang squeeze, with the shape<1 boost.
  if (shape == 1.0) return -std::log(canonical_open(rng));
  if (shape < 1.0) {
    double u = canonical_open(rng);
    return gamma_sample(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal_sample(rng);
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = canonical_open(rng);
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

void dirichlet_sample(Rng& rng, double alpha, std::span<double> out) {
  double total = 0.0;
  for (double& x : out) {
    x = gamma_sample(rng, alpha);
    total += x;
  }
  if (total <= 0.0) {
    // all-underflow corner for very small alpha: fall back to one-hot
    size_t j = static_cast<size_t>(uniform_below(rng, out.size()));
    for (double& x : out) x = 0.0;
    out[j] = 1.0;
    return;
  }
  for (double& x : out) x /= total;
}

}  // namespace slda
