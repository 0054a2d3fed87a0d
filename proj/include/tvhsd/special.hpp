#pragma once

namespace tvhsd::ndgrad {

// psi(x) for x > 0. Recurrence up to x >= 6, then the asymptotic series.
double digamma(double x);

// psi'(x) for x > 0; needed for the gradients of the evidential loss.
double trigamma(double x);

// ln Gamma(x) for x > 0. Recurrence up to x >= 10, then Stirling's series.
double log_gamma(double x);

}  // namespace tvhsd::ndgrad
