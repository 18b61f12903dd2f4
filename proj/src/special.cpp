#include "slda/special.hpp"

#include <cmath>

namespace slda {

double digamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("digamma: argument must be positive");
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  // asymptotic series in z = 1/x^2; coefficients are -B_2n/(2n)
  double z = 1.0 / (x * x);
  double series = z * (1.0 / 12.0
               - z * (1.0 / 120.0
               - z * (1.0 / 252.0
               - z * (1.0 / 240.0
               - z * (1.0 / 132.0
               - z * (691.0 / 32760.0
               - z * (1.0 / 12.0)))))));
  return result + std::log(x) - 0.5 / x - series;
}

}  // namespace slda
