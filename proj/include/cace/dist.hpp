#pragma once

#include "cace/rng.hpp"

namespace cace {

// ---- standard normal -----------------------------------------------------

double normal_pdf(double x);
double normal_cdf(double x);   // erfc-based, accurate in both tails
double normal_quantile(double p);  // Wichura AS241

// ---- gamma / chi-square --------------------------------------------------

// regularized lower incomplete gamma P(a, x)
double gamma_p(double a, double x);

double chi2_cdf(double x, double k);
double chi2_pdf(double x, double k);

// p-quantile of chi^2_k, bracketed Newton/bisection, abs tolerance 1e-10
double chi2_quantile(double p, double k);

// ---- sampling ------------------------------------------------------------

double sample_normal(Rng& rng);
double sample_exponential(Rng& rng);           // rate 1
double sample_gamma(double shape, Rng& rng);   // scale 1, any shape > 0
double sample_chi2(double k, Rng& rng);
double sample_beta(double a, double b, Rng& rng);

// N(mu, sd^2) restricted to x > lo (positive side when lo = 0)
double sample_truncnorm_above(double mu, double sd, double lo, Rng& rng);
// N(mu, sd^2) restricted to x <= hi
double sample_truncnorm_below(double mu, double sd, double hi, Rng& rng);

// mean of N(mu, sd^2) truncated to the interval (a, b].  When the interval
// probability underflows the nearer endpoint is returned (the truncated mean
// tends to that endpoint in the limit).
double truncnorm_mean(double mu, double sd, double a, double b);

}  // namespace cace
