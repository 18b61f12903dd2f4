#pragma once

#include <stdexcept>

namespace slda {

// psi(x) for x > 0. Upward recurrence psi(x) = psi(x+1) - 1/x until x >= 6,
// then the Bernoulli asymptotic series through x^-14; absolute error below
// 2e-13 on the positive axis.
double digamma(double x);

}  // namespace slda
