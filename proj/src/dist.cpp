#include "cace/dist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cace {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr double kCdfClamp = 1e-15;  // keep CDF values away from 0/1
}  // namespace

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

// Wichura's algorithm AS241 (PPND16), relative error ~1e-16
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p outside (0,1)");
  const double q = p - 0.5;
  double r;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) *
                    r +
                4.5921953931549871457e+4) *
                   r +
               1.3731693765509461125e+4) *
                  r +
              1.9715909503065514427e+3) *
                 r +
             1.3314166789178437745e+2) *
                r +
            3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) *
                    r +
                2.1213794301586595867e+4) *
                   r +
               5.3941960214247511077e+3) *
                  r +
              6.8718700749205790830e+2) *
                 r +
             4.2313330701600911252e+1) *
                r +
            1.0);
  }
  r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double v;
  if (r <= 5.0) {
    r -= 1.6;
    v = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) *
                 r +
             1.27045825245236838258e+0) *
                r +
            3.64784832476320460504e+0) *
               r +
           5.76949722146069140550e+0) *
              r +
          4.63033784615654529590e+0) *
             r +
         1.42343711074968357734e+0) /
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) *
                 r +
             1.48103976427480074590e-1) *
                r +
            6.89767334985100004550e-1) *
               r +
           1.67638483018380384940e+0) *
              r +
          2.05319162663775882187e+0) *
             r +
         1.0);
  } else {
    r -= 5.0;
    v = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) *
                 r +
             2.65321895265761230930e-2) *
                r +
            2.96560571828504891230e-1) *
               r +
           1.78482653991729133580e+0) *
              r +
          5.46378491116411436990e+0) *
             r +
         6.65790464350110377720e+0) /
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) *
                 r +
             7.86869131145613259100e-4) *
                r +
            1.48753612908506148525e-2) *
               r +
           1.36929880922735805310e-1) *
              r +
          5.99832206555887937690e-1) *
             r +
         1.0);
  }
  return (q < 0.0) ? -v : v;
}

// P(a, x): series expansion for x < a + 1, Lentz continued fraction otherwise
double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::domain_error("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 1000; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  // continued fraction for Q(a,x)
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  const double q = std::exp(-x + a * std::log(x) - lg) * h;
  return 1.0 - q;
}

double chi2_cdf(double x, double k) {
  if (x <= 0.0) return 0.0;
  return gamma_p(0.5 * k, 0.5 * x);
}

double chi2_pdf(double x, double k) {
  if (x <= 0.0) return 0.0;
  const double half_k = 0.5 * k;
  return std::exp((half_k - 1.0) * std::log(x) - 0.5 * x - half_k * std::log(2.0) -
                  std::lgamma(half_k));
}

double chi2_quantile(double p, double k) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("chi2_quantile: p outside (0,1)");
  // Wilson-Hilferty starting point
  const double z = normal_quantile(p);
  const double c = 2.0 / (9.0 * k);
  double x = k * std::pow(1.0 - c + z * std::sqrt(c), 3.0);
  if (!(x > 0.0)) x = 0.5 * k;

  // establish a bracket
  double lo = 0.0, hi = std::max(x, 1.0);
  while (chi2_cdf(hi, k) < p) hi *= 2.0;
  x = std::clamp(x, lo + 1e-300, hi);

  for (int iter = 0; iter < 200; ++iter) {
    const double f = chi2_cdf(x, k) - p;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    const double d = chi2_pdf(x, k);
    double step = (d > 0.0) ? f / d : 0.0;
    double next = x - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // bisection fallback
    if (std::fabs(next - x) < 1e-10) return next;
    x = next;
  }
  return x;
}

double sample_normal(Rng& rng) { return normal_quantile(rng.uniform()); }

double sample_exponential(Rng& rng) { return -std::log(rng.uniform()); }

// Marsaglia-Tsang; shape < 1 handled by the boosting identity
double sample_gamma(double shape, Rng& rng) {
  if (shape <= 0.0) throw std::domain_error("sample_gamma: shape must be positive");
  if (shape < 1.0) {
    const double u = rng.uniform();
    return sample_gamma(shape + 1.0, rng) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = sample_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double sample_chi2(double k, Rng& rng) { return 2.0 * sample_gamma(0.5 * k, rng); }

double sample_beta(double a, double b, Rng& rng) {
  const double g1 = sample_gamma(a, rng);
  const double g2 = sample_gamma(b, rng);
  return g1 / (g1 + g2);
}

double sample_truncnorm_above(double mu, double sd, double lo, Rng& rng) {
  const double alpha = (lo - mu) / sd;
  const double p_lo = normal_cdf(alpha);
  double u = p_lo + rng.uniform() * (1.0 - p_lo);
  u = std::clamp(u, kCdfClamp, 1.0 - kCdfClamp);
  double x = mu + sd * normal_quantile(u);
  if (x <= lo) x = lo + 1e-10 * sd;  // tail clamp can land on the wrong side
  return x;
}

double sample_truncnorm_below(double mu, double sd, double hi, Rng& rng) {
  const double beta = (hi - mu) / sd;
  const double p_hi = normal_cdf(beta);
  double u = rng.uniform() * p_hi;
  u = std::clamp(u, kCdfClamp, 1.0 - kCdfClamp);
  double x = mu + sd * normal_quantile(u);
  if (x > hi) x = hi;
  return x;
}

double truncnorm_mean(double mu, double sd, double a, double b) {
  const double alpha = (a - mu) / sd;
  const double beta = (b - mu) / sd;
  const double z = normal_cdf(beta) - normal_cdf(alpha);
  if (!(z > 1e-300)) {
    // interval probability underflows: limit is the endpoint nearer the mode
    return (std::fabs(alpha) < std::fabs(beta)) ? a : b;
  }
  return mu + sd * (normal_pdf(alpha) - normal_pdf(beta)) / z;
}

}  // namespace cace
