#pragma once

namespace vbglmm {

// Digamma psi(x) = d/dx log Gamma(x) and trigamma psi'(x) for x > 0.
// Recurrence up to x >= 10, then the asymptotic Bernoulli series.
double digamma(double x);
double trigamma(double x);
double log_gamma(double x);

}  // namespace vbglmm
