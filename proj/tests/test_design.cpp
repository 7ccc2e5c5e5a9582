#include "doctest.h"

#include <set>

#include "cace/design.hpp"
#include "cace/dist.hpp"

#ifdef HAVE_BOOST_MATH
#include <boost/math/distributions/chi_squared.hpp>
#endif

using namespace cace;

TEST_CASE("completely randomized assignment has exact margins") {
  Rng rng(1);
  for (int rep = 0; rep < 50; ++rep) {
    const Assignment a = sample_cre(10, 4, rng);
    CHECK(a.z.sum() == 4);
    CHECK(a.z.size() == 10);
    CHECK(a.n1 == 4);
  }
  CHECK_THROWS_AS(sample_cre(4, 0, rng), BadMargins);
  CHECK_THROWS_AS(sample_cre(4, 4, rng), BadMargins);
  CHECK_THROWS_AS(sample_cre(4, 5, rng), BadMargins);
}

TEST_CASE("assignment is uniform over units") {
  Rng rng(2);
  const int n = 8, n1 = 3, reps = 40000;
  std::vector<int> counts(n, 0);
  for (int rep = 0; rep < reps; ++rep) {
    const Assignment a = sample_cre(n, n1, rng);
    for (int i = 0; i < n; ++i) counts[i] += a.z[i];
  }
  for (int i = 0; i < n; ++i)
    CHECK(static_cast<double>(counts[i]) / reps ==
          doctest::Approx(static_cast<double>(n1) / n).epsilon(0.03));
}

TEST_CASE("finite population covariance matches a hand computation") {
  Matrix x(3, 2);
  x << 1.0, 2.0, 3.0, 4.0, 5.0, 9.0;
  const Matrix s = finite_pop_cov(x);
  // column means (3, 5); cross products by hand, divisor 2
  CHECK(s(0, 0) == doctest::Approx(4.0));
  CHECK(s(1, 1) == doctest::Approx(13.0));
  CHECK(s(0, 1) == doctest::Approx(7.0));
  CHECK(s(1, 0) == doctest::Approx(7.0));
  CHECK_THROWS_AS(finite_pop_cov(Matrix::Zero(1, 2)), TooFewRows);
}

TEST_CASE("Mahalanobis statistic hand example") {
  // univariate: M = (n/4) (xbar1 - xbar0)^2 / S2
  Matrix x(4, 1);
  x << 1.0, 2.0, 3.0, 6.0;
  Assignment a;
  a.z = IntVector(4);
  a.z << 1, 1, 0, 0;
  a.n1 = 2;
  const double s2 = finite_pop_cov(x)(0, 0);
  const double diff = (1.0 + 2.0) / 2.0 - (3.0 + 6.0) / 2.0;
  CHECK(mahalanobis(x, a) == doctest::Approx(4.0 / 4.0 * diff * diff / s2).epsilon(1e-12));
}

TEST_CASE("Mahalanobis statistic is affine invariant") {
  Rng rng(3);
  Matrix x(20, 3);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 3; ++j) x(i, j) = sample_normal(rng);
  Assignment a = sample_cre(20, 10, rng);

  Matrix t(3, 3);
  t << 2.0, 0.3, 0.0, -1.0, 1.5, 0.2, 0.1, 0.0, 0.7;  // invertible
  Eigen::RowVector3d shift(5.0, -2.0, 0.25);
  const Matrix y = (x * t).rowwise() + shift;
  CHECK(mahalanobis(y, a) == doctest::Approx(mahalanobis(x, a)).epsilon(1e-9));
}

TEST_CASE("degenerate covariates raise SingularCovariance") {
  Matrix x(6, 2);
  for (int i = 0; i < 6; ++i) {
    x(i, 0) = i;
    x(i, 1) = 2.0 * i;  // exact collinearity
  }
  Assignment a;
  a.z = IntVector(6);
  a.z << 1, 1, 1, 0, 0, 0;
  a.n1 = 3;
  CHECK_THROWS_AS(mahalanobis(x, a), SingularCovariance);
}

TEST_CASE("threshold from acceptance probability") {
  CHECK(threshold_from_pa(5, 0.01) == doctest::Approx(chi2_quantile(0.01, 5.0)).epsilon(1e-12));
#ifdef HAVE_BOOST_MATH
  boost::math::chi_squared_distribution<double> cd(5.0);
  CHECK(threshold_from_pa(5, 0.01) ==
        doctest::Approx(boost::math::quantile(cd, 0.01)).epsilon(1e-8));
#endif
  CHECK_THROWS_AS(threshold_from_pa(5, 0.0), BadProbability);
  CHECK_THROWS_AS(threshold_from_pa(5, 1.5), BadProbability);
}

TEST_CASE("rerandomization only returns balanced assignments") {
  Rng rng(4);
  Matrix x(40, 2);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 2; ++j) x(i, j) = sample_normal(rng);

  DesignSpec spec;
  spec.kind = DesignKind::ReM;
  spec.n = 40;
  spec.n1 = 20;
  spec.threshold_a = threshold_from_pa(2, 0.2);
  for (int rep = 0; rep < 30; ++rep) {
    const auto [a, report] = sample_rem(x, 20, spec, rng);
    CHECK(report.accepted);
    CHECK(report.m <= spec.threshold_a);
    CHECK(mahalanobis(x, a) == doctest::Approx(report.m).epsilon(1e-12));
    CHECK(a.z.sum() == 20);
  }

  SUBCASE("certain acceptance takes one try") {
    spec.threshold_a = 1e12;
    const auto [a, report] = sample_rem(x, 20, spec, rng);
    CHECK(report.tries == 1);
  }

  SUBCASE("impossible threshold exhausts the try budget") {
    spec.threshold_a = 1e-12;
    spec.max_tries = 50;
    CHECK_THROWS_AS(sample_rem(x, 20, spec, rng), MaxTriesExceeded);
  }
}
