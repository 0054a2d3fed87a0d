#include "tvhsd/special.hpp"

#include "tvhsd/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace tvhsd::ndgrad {

namespace {

void require_positive(double x, const char* name) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError(std::string(name) + " requires x > 0, got " + std::to_string(x));
  }
}

}  // namespace

double digamma(double x) {
  require_positive(x, "digamma");
  double shift = 0.0;
  while (x < 6.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  // psi(x) ~ ln x - 1/(2x) - sum_k B_2k / (2k x^2k)
  const double r = 1.0 / x;
  const double r2 = r * r;
  const double series =
      r2 * (1.0 / 12 -
            r2 * (1.0 / 120 -
                  r2 * (1.0 / 252 -
                        r2 * (1.0 / 240 -
                              r2 * (1.0 / 132 - r2 * (691.0 / 32760 - r2 / 12))))));
  return shift + std::log(x) - 0.5 * r - series;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  double shift = 0.0;
  while (x < 6.0) {
    shift += 1.0 / (x * x);
    x += 1.0;
  }
  // psi'(x) ~ 1/x + 1/(2x^2) + sum_k B_2k / x^(2k+1)
  const double r = 1.0 / x;
  const double r2 = r * r;
  const double series =
      r * r2 *
      (1.0 / 6 -
       r2 * (1.0 / 30 -
             r2 * (1.0 / 42 -
                   r2 * (1.0 / 30 - r2 * (5.0 / 66 - r2 * (691.0 / 2730 - r2 * 7.0 / 6))))));
  return shift + r + 0.5 * r2 + series;
}

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  if (x == 1.0 || x == 2.0) return 0.0;
  // Gamma(x) = Gamma(x + n) / (x (x+1) ... (x+n-1))
  double product = 1.0;
  while (x < 10.0) {
    product *= x;
    x += 1.0;
  }
  const double r = 1.0 / x;
  const double r2 = r * r;
  const double series =
      r * (1.0 / 12 -
           r2 * (1.0 / 360 -
                 r2 * (1.0 / 1260 -
                       r2 * (1.0 / 1680 -
                             r2 * (1.0 / 1188 - r2 * (691.0 / 360360 - r2 / 156))))));
  const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
  // (x - 1/2) ln x - x, arranged so the two large terms do not cancel
  const double stirling = (x - 0.5) * (std::log(x) - 1.0) - 0.5;
  return stirling + half_log_two_pi + series - std::log(product);
}

}  // namespace tvhsd::ndgrad
