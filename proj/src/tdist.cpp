#include "swsim/tdist.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace swsim {

namespace {

// Remainder of Stirling's series for log Gamma(x), x >= 10.
double stirling_tail(double x) {
  const double r = 1.0 / x, r2 = r * r;
  return r * (1.0 / 12 - r2 * (1.0 / 360 - r2 * (1.0 / 1260 - r2 * (1.0 / 1680 -
              r2 * (1.0 / 1188 - r2 * (691.0 / 360360))))));
}

// The continued fraction converges slowly when a or b is large, and its
// value is then sensitive to rounding in x at a relative rate of about a;
// extended precision keeps that amplification below double resolution.
using Wide = long double;

// Modified Lentz evaluation of the incomplete beta continued fraction.
Wide beta_continued_fraction(Wide a, Wide b, Wide x) {
  constexpr Wide tiny = 1e-300L;
  constexpr Wide eps = std::numeric_limits<Wide>::epsilon();
  const Wide qab = a + b, qap = a + 1, qam = a - 1;
  Wide c = 1;
  Wide d = 1 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1 / d;
  Wide h = d;
  for (int m = 1; m <= 100000; ++m) {
    const int m2 = 2 * m;
    Wide aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1 / d;
    const Wide del = d * c;
    h *= del;
    if (std::fabs(del - 1) < 2 * eps) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge");
}

// x and y = 1 - x are passed separately so neither tail loses precision.
double incomplete_beta(double a, double b, Wide x, Wide y) {
  if (x <= 0) return 0.0;
  if (y <= 0) return 1.0;
  const bool swap = x > (a + 1.0) / (a + b + 2.0);
  if (swap) {
    std::swap(a, b);
    std::swap(x, y);
  }
  // log1p of the small complement keeps b log y exact when y is near 1 and b is large.
  const Wide log_x = x < 0.5L ? std::log(x) : std::log1p(-y);
  const Wide log_y = y < 0.5L ? std::log(y) : std::log1p(-x);
  const Wide log_front = a * log_x + b * log_y - log_beta(a, b);
  const double value = static_cast<double>(std::exp(log_front) * beta_continued_fraction(a, b, x) / a);
  return swap ? 1.0 - value : value;
}

}  // namespace

double log_beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("log_beta requires positive arguments");
  if (a < b) std::swap(a, b);
  if (a < 10.0) return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  // lgamma(a) - lgamma(a + b) without cancelling two large numbers.
  const double ratio = -(a - 0.5) * std::log1p(b / a) - b * std::log(a + b) + b +
                       stirling_tail(a) - stirling_tail(a + b);
  if (b < 10.0) return std::lgamma(b) + ratio;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (b - 0.5) * std::log(b) - b + stirling_tail(b) +
         ratio;
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("incomplete beta requires a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("incomplete beta requires x in [0, 1]");
  return incomplete_beta(a, b, x, 1.0L - x);
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw std::domain_error("degrees of freedom must be positive");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(df)) return std::erfc(std::fabs(t) / std::numbers::sqrt2);
  const double t2 = t * t;
  if (std::isinf(t2)) return 0.0;
  const Wide denominator = static_cast<Wide>(df) + static_cast<Wide>(t) * t;
  return incomplete_beta(0.5 * df, 0.5, df / denominator, static_cast<Wide>(t) * t / denominator);
}

double student_t_cdf(double t, double df) {
  const double tail = 0.5 * student_t_two_sided_p(t, df);
  return t < 0.0 ? tail : 1.0 - tail;
}

}  // namespace swsim
