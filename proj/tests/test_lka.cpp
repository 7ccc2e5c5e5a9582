#include "doctest.h"

#include <cmath>

#include "cace/dist.hpp"
#include "cace/lka.hpp"

#ifdef HAVE_BOOST_MATH
#include <boost/math/distributions/chi_squared.hpp>
#endif

using namespace cace;

TEST_CASE("truncated chi draws respect the threshold") {
  Rng rng(41);
  const double a = chi2_quantile(0.01, 5.0);
  for (int i = 0; i < 20000; ++i) {
    const double c = truncated_chi_sample(5, a, rng);
    CHECK(c >= 0.0);
    CHECK(c * c <= a + 1e-12);
    const double l = sample_l(5, a, rng);
    CHECK(std::fabs(l) <= std::sqrt(a) + 1e-12);
  }
}

TEST_CASE("one dimensional case degenerates to a signed truncated chi") {
  // k = 1: the beta factor is identically 1, so |L| has the truncated chi law
  Rng rng(42);
  const double a = chi2_quantile(0.2, 1.0);
  double mean = 0.0, mean_sq = 0.0;
  const int n = 200000;
  Rng rng2(42);
  for (int i = 0; i < n; ++i) {
    const double l = sample_l(1, a, rng);
    mean += l;
    mean_sq += l * l;
  }
  mean /= n;
  mean_sq /= n;
  CHECK(mean == doctest::Approx(0.0).epsilon(0.01));
  // E[L^2] = E[chi^2_1 | chi^2_1 <= a] = F_3(a) / F_1(a)
  const double oracle = chi2_cdf(a, 3.0) / chi2_cdf(a, 1.0);
  CHECK(mean_sq == doctest::Approx(oracle).epsilon(0.02));
}

TEST_CASE("second moment of L matches the analytic ratio for general k") {
  Rng rng(43);
  const int n = 200000;
  for (int k : {2, 5}) {
    const double a = chi2_quantile(0.05, static_cast<double>(k));
    double mean_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double l = sample_l(k, a, rng);
      mean_sq += l * l;
    }
    mean_sq /= n;
    // E[L^2] = (1/k) E[chi^2_k | <= a] = F_{k+2}(a) / (k F_k(a)) * k ... the
    // beta factor has mean 1/k, the truncated chi^2 mean is k F_{k+2}/F_k
    double oracle = chi2_cdf(a, k + 2.0) / chi2_cdf(a, static_cast<double>(k));
#ifdef HAVE_BOOST_MATH
    boost::math::chi_squared_distribution<double> num(k + 2.0), den(static_cast<double>(k));
    oracle = boost::math::cdf(num, a) / boost::math::cdf(den, a);
#endif
    CHECK(mean_sq == doctest::Approx(oracle).epsilon(0.03));
  }
}

TEST_CASE("mixture quantile recovers the normal quantile at the edges") {
  MixtureQuantileSpec spec;
  spec.k = 5;
  spec.a = chi2_quantile(0.01, 5.0);
  spec.p = 0.975;
  spec.draws = 1'000'000;
  spec.seed = 9;

  spec.r2 = 0.0;  // pure normal component
  CHECK(mixture_quantile(spec) == doctest::Approx(1.959963984540054).epsilon(0.005));

  // a = infinity removes the truncation, so the mixture is standard normal
  // for every r2
  spec.a = std::numeric_limits<double>::infinity();
  for (double r2 : {0.0, 0.5, 1.0}) {
    spec.r2 = r2;
    CHECK(mixture_quantile(spec) == doctest::Approx(1.959963984540054).epsilon(0.005));
  }
}

TEST_CASE("upper quantile is non-increasing in r2") {
  MixtureQuantileSpec spec;
  spec.k = 5;
  spec.a = chi2_quantile(0.01, 5.0);
  spec.p = 0.975;
  spec.draws = 400'000;
  spec.seed = 10;
  double prev = std::numeric_limits<double>::infinity();
  for (double r2 = 0.0; r2 <= 1.0 + 1e-9; r2 += 0.1) {
    spec.r2 = r2;
    const double q = mixture_quantile(spec);
    CHECK(q <= prev + 0.01);
    prev = q;
  }
  // at full r2 the quantile is bounded by the truncation radius
  spec.r2 = 1.0;
  CHECK(mixture_quantile(spec) <= std::sqrt(spec.a) + 1e-9);
}

TEST_CASE("symmetry of the reference distribution") {
  MixtureQuantileSpec spec;
  spec.k = 3;
  spec.a = chi2_quantile(0.05, 3.0);
  spec.r2 = 0.6;
  spec.draws = 400'000;
  spec.seed = 11;
  spec.p = 0.975;
  const double hi = mixture_quantile(spec);
  spec.p = 0.025;
  const double lo = mixture_quantile(spec);
  CHECK(lo == doctest::Approx(-hi).epsilon(0.01));
}

TEST_CASE("quantiles are deterministic and the cache matches one shot evaluation") {
  MixtureQuantileSpec spec;
  spec.k = 5;
  spec.a = chi2_quantile(0.01, 5.0);
  spec.r2 = 0.4;
  spec.draws = 200'000;
  spec.seed = 12;
  const double once = mixture_quantile(spec);
  CHECK(mixture_quantile(spec) == once);

  QuantileCache cache;
  CHECK(cache.quantile(spec) == once);
  CHECK(cache.quantile(spec) == once);
  spec.r2 = 0.7;
  CHECK(cache.quantile(spec) == mixture_quantile(spec));
}
