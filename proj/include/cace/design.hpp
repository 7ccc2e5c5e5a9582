#pragma once

#include "cace/population.hpp"
#include "cace/rng.hpp"

namespace cace {

enum class DesignKind { CRE, ReM };

struct DesignSpec {
  DesignKind kind = DesignKind::CRE;
  int n = 0;
  int n1 = 0;
  double threshold_a = 0.0;       // ReM only
  long max_tries = 1'000'000;     // ReM only; acceptance is rejection sampling
};

struct BalanceReport {
  double m = 0.0;        // Mahalanobis statistic of the returned assignment
  Vector mean_diff;      // xbar_1 - xbar_0
  bool accepted = false;
  long tries = 0;
};

// Completely randomized assignment: every size-n1 subset equally probable.
Assignment sample_cre(int n, int n1, Rng& rng);

// Finite population covariance of the covariate columns, divisor n-1.
Matrix finite_pop_cov(const Matrix& x);

// Precomputed pieces for repeated M evaluation over candidate assignments.
// S_xx is factorized once; condition numbers above the cap raise
// SingularCovariance (default cap 1e12).
class MahalanobisCalc {
 public:
  explicit MahalanobisCalc(const Matrix& x, double condition_cap = 1e12);

  double m_statistic(const Assignment& a) const;
  Vector mean_diff(const Assignment& a) const;

 private:
  const Matrix x_;
  Matrix sxx_inv_;
};

// M = (n/4) tau_x' S_xx^{-1} tau_x over the covariate mean difference tau_x.
double mahalanobis(const Matrix& x, const Assignment& a, double condition_cap = 1e12);

// a such that Pr(chi^2_k <= a) = pa.
double threshold_from_pa(int k, double pa);

// Rerandomization: redraw CRE assignments until M <= threshold_a.
std::pair<Assignment, BalanceReport> sample_rem(const Matrix& x, int n1, const DesignSpec& spec,
                                                Rng& rng);

}  // namespace cace
