#include "cace/design.hpp"

#include <cmath>

#include "cace/dist.hpp"

namespace cace {

Assignment sample_cre(int n, int n1, Rng& rng) {
  if (!(n1 > 0 && n1 < n)) throw BadMargins("sample_cre: need 0 < n1 < n");
  Assignment a;
  a.n1 = n1;
  a.z = IntVector::Zero(n);
  // partial Fisher-Yates over unit indices; first n1 slots become treated
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = 0; i < n1; ++i) {
    const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[i], idx[j]);
    a.z[idx[i]] = 1;
  }
  return a;
}

Matrix finite_pop_cov(const Matrix& x) {
  const Eigen::Index n = x.rows();
  if (n < 2) throw TooFewRows("finite_pop_cov: need at least 2 rows");
  const Matrix centered = x.rowwise() - x.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(n - 1);
}

MahalanobisCalc::MahalanobisCalc(const Matrix& x, double condition_cap) : x_(x) {
  const Matrix sxx = finite_pop_cov(x);
  Eigen::SelfAdjointEigenSolver<Matrix> es(sxx);
  const Vector& ev = es.eigenvalues();
  const double max_ev = ev.maxCoeff();
  const double min_ev = ev.minCoeff();
  if (!(min_ev > 0.0) || max_ev / min_ev > condition_cap)
    throw SingularCovariance("mahalanobis: covariate covariance is near-singular");
  sxx_inv_ = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

Vector MahalanobisCalc::mean_diff(const Assignment& a) const {
  const Eigen::Index n = x_.rows();
  Vector sum1 = Vector::Zero(x_.cols());
  Vector sum0 = Vector::Zero(x_.cols());
  int n1 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (a.z[i])
      sum1 += x_.row(i), ++n1;
    else
      sum0 += x_.row(i);
  }
  return sum1 / n1 - sum0 / static_cast<double>(n - n1);
}

double MahalanobisCalc::m_statistic(const Assignment& a) const {
  const Vector d = mean_diff(a);
  return (static_cast<double>(x_.rows()) / 4.0) * d.dot(sxx_inv_ * d);
}

double mahalanobis(const Matrix& x, const Assignment& a, double condition_cap) {
  return MahalanobisCalc(x, condition_cap).m_statistic(a);
}

double threshold_from_pa(int k, double pa) {
  if (!(pa > 0.0 && pa < 1.0)) throw BadProbability("threshold_from_pa: need 0 < pa < 1");
  return chi2_quantile(pa, static_cast<double>(k));
}

std::pair<Assignment, BalanceReport> sample_rem(const Matrix& x, int n1, const DesignSpec& spec,
                                                Rng& rng) {
  const int n = static_cast<int>(x.rows());
  MahalanobisCalc calc(x);
  BalanceReport report;
  for (long t = 1; t <= spec.max_tries; ++t) {
    Assignment a = sample_cre(n, n1, rng);
    const double m = calc.m_statistic(a);
    if (m <= spec.threshold_a) {
      report.m = m;
      report.mean_diff = calc.mean_diff(a);
      report.accepted = true;
      report.tries = t;
      return {std::move(a), std::move(report)};
    }
  }
  throw MaxTriesExceeded("sample_rem: no acceptable assignment in " +
                         std::to_string(spec.max_tries) + " tries");
}

}  // namespace cace
