#include "cace/wald.hpp"

#include <cmath>

#include "cace/design.hpp"
#include "cace/dist.hpp"

namespace cace {

namespace {

struct ArmStats {
  std::vector<Eigen::Index> idx1, idx0;
};

ArmStats split_arms(const ObservedDataset& obs) {
  ArmStats s;
  for (Eigen::Index i = 0; i < obs.n(); ++i) (obs.z[i] ? s.idx1 : s.idx0).push_back(i);
  return s;
}

double arm_mean(const Vector& v, const std::vector<Eigen::Index>& idx) {
  double sum = 0.0;
  for (auto i : idx) sum += v[i];
  return sum / static_cast<double>(idx.size());
}

// sample variance with divisor m-1
double arm_variance(const Vector& v, const std::vector<Eigen::Index>& idx) {
  const double mean = arm_mean(v, idx);
  double ss = 0.0;
  for (auto i : idx) ss += (v[i] - mean) * (v[i] - mean);
  return ss / static_cast<double>(idx.size() - 1);
}

// within-arm covariance row between v and each covariate column, divisor m-1
Eigen::RowVectorXd arm_cov_with_x(const Vector& v, const Matrix& x,
                                  const std::vector<Eigen::Index>& idx) {
  const double v_mean = arm_mean(v, idx);
  Eigen::RowVectorXd x_mean = Eigen::RowVectorXd::Zero(x.cols());
  for (auto i : idx) x_mean += x.row(i);
  x_mean /= static_cast<double>(idx.size());
  Eigen::RowVectorXd cov = Eigen::RowVectorXd::Zero(x.cols());
  for (auto i : idx) cov += (v[i] - v_mean) * (x.row(i) - x_mean);
  return cov / static_cast<double>(idx.size() - 1);
}

Matrix arm_cov_matrix(const Matrix& x, const std::vector<Eigen::Index>& idx) {
  Matrix sub(idx.size(), x.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) sub.row(r) = x.row(idx[r]);
  return finite_pop_cov(sub);
}

Matrix robust_inverse(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const Vector& ev = es.eigenvalues();
  if (!(ev.minCoeff() > 0.0) || ev.maxCoeff() / ev.minCoeff() > 1e12)
    throw SingularCovariance("projected_quantities: covariate covariance is near-singular");
  return es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double itt_w_hat(const ObservedDataset& obs) {
  const ArmStats s = split_arms(obs);
  if (s.idx1.empty() || s.idx0.empty()) throw EmptyArm("itt_w_hat: an assignment arm is empty");
  const Vector w = obs.w_obs.cast<double>();
  return arm_mean(w, s.idx1) - arm_mean(w, s.idx0);
}

double itt_y_hat(const ObservedDataset& obs) {
  const ArmStats s = split_arms(obs);
  if (s.idx1.empty() || s.idx0.empty()) throw EmptyArm("itt_y_hat: an assignment arm is empty");
  return arm_mean(obs.y_obs, s.idx1) - arm_mean(obs.y_obs, s.idx0);
}

double wald_estimate(const ObservedDataset& obs) {
  const double itt_w = itt_w_hat(obs);
  if (!(itt_w > 0.0))
    throw NonpositiveIttW("wald_estimate: estimated complier fraction is not positive");
  return itt_y_hat(obs) / itt_w;
}

Vector a_hat_residuals(const ObservedDataset& obs, double tau) {
  return obs.y_obs - tau * obs.w_obs.cast<double>();
}

double var_tilde_cre(const ObservedDataset& obs, double tau) {
  const ArmStats s = split_arms(obs);
  if (s.idx1.size() < 2 || s.idx0.size() < 2)
    throw ArmTooSmall("var_tilde_cre: each arm needs at least 2 units");
  const Vector a_hat = a_hat_residuals(obs, tau);
  return arm_variance(a_hat, s.idx1) / static_cast<double>(s.idx1.size()) +
         arm_variance(a_hat, s.idx0) / static_cast<double>(s.idx0.size());
}

EstimateReport ci_wald_cre(const ObservedDataset& obs, double alpha) {
  const double itt_w = itt_w_hat(obs);
  if (!(itt_w > 0.0))
    throw NonpositiveIttW("ci_wald_cre: estimated complier fraction is not positive");
  const double itt_y = itt_y_hat(obs);
  const double tau = itt_y / itt_w;
  const double var = var_tilde_cre(obs, tau);
  const double nu = normal_quantile(1.0 - alpha / 2.0);
  const double half = nu * std::sqrt(var) / itt_w;

  EstimateReport report;
  report.method = "wald";
  report.point = tau;
  report.ci_lo = tau - half;
  report.ci_hi = tau + half;
  report.alpha = alpha;
  WaldDiagnostics diag;
  diag.itt_w = itt_w;
  diag.itt_y = itt_y;
  diag.var_tilde = var;
  diag.var_tilde_x = var;
  diag.r2_hat = 0.0;
  report.wald = diag;
  return report;
}

ProjectedQuantities projected_quantities(const ObservedDataset& obs, double tau, SxxMode mode) {
  const ArmStats s = split_arms(obs);
  const Eigen::Index k = obs.k();
  if (static_cast<Eigen::Index>(s.idx1.size()) <= k + 1 ||
      static_cast<Eigen::Index>(s.idx0.size()) <= k + 1)
    throw ArmTooSmall("projected_quantities: arm sizes must exceed k+1");

  const Vector a_hat = a_hat_residuals(obs, tau);
  const double s2_a1 = arm_variance(a_hat, s.idx1);
  const double s2_a0 = arm_variance(a_hat, s.idx0);
  const Eigen::RowVectorXd cov1 = arm_cov_with_x(a_hat, obs.x, s.idx1);
  const Eigen::RowVectorXd cov0 = arm_cov_with_x(a_hat, obs.x, s.idx0);

  const Matrix pooled_inv = robust_inverse(finite_pop_cov(obs.x));

  ProjectedQuantities out;
  if (mode == SxxMode::Pooled) {
    out.s2_proj_arm1 = cov1 * pooled_inv * cov1.transpose();
    out.s2_proj_arm0 = cov0 * pooled_inv * cov0.transpose();
  } else {
    out.s2_proj_arm1 = cov1 * robust_inverse(arm_cov_matrix(obs.x, s.idx1)) * cov1.transpose();
    out.s2_proj_arm0 = cov0 * robust_inverse(arm_cov_matrix(obs.x, s.idx0)) * cov0.transpose();
  }
  const Eigen::RowVectorXd diff = cov1 - cov0;
  out.s2_proj_diff = diff * pooled_inv * diff.transpose();

  const double n1 = static_cast<double>(s.idx1.size());
  const double n0 = static_cast<double>(s.idx0.size());
  const double n = static_cast<double>(obs.n());
  out.var_tilde_x = std::max(s2_a1 / n1 + s2_a0 / n0 - out.s2_proj_diff / n, 0.0);
  const double numer = out.s2_proj_arm1 / n1 + out.s2_proj_arm0 / n0 - out.s2_proj_diff / n;
  out.r2_hat = (out.var_tilde_x > 0.0) ? std::clamp(numer / out.var_tilde_x, 0.0, 1.0) : 0.0;
  return out;
}

EstimateReport ci_wald_rem(const ObservedDataset& obs, double alpha, double threshold_a,
                           const MixtureQuantileSpec& mc_spec, QuantileCache* cache,
                           SxxMode mode) {
  const double itt_w = itt_w_hat(obs);
  if (!(itt_w > 0.0))
    throw NonpositiveIttW("ci_wald_rem: estimated complier fraction is not positive");
  const double itt_y = itt_y_hat(obs);
  const double tau = itt_y / itt_w;
  const ProjectedQuantities proj = projected_quantities(obs, tau, mode);

  MixtureQuantileSpec spec = mc_spec;
  spec.k = static_cast<int>(obs.k());
  spec.a = threshold_a;
  spec.r2 = proj.r2_hat;
  spec.p = 1.0 - alpha / 2.0;
  const double lambda = cache ? cache->quantile(spec) : mixture_quantile(spec);
  const double half = lambda * std::sqrt(proj.var_tilde_x) / itt_w;

  EstimateReport report;
  report.method = "wald-rem";
  report.point = tau;
  report.ci_lo = tau - half;
  report.ci_hi = tau + half;
  report.alpha = alpha;
  WaldDiagnostics diag;
  diag.itt_w = itt_w;
  diag.itt_y = itt_y;
  diag.var_tilde = var_tilde_cre(obs, tau);
  diag.var_tilde_x = proj.var_tilde_x;
  diag.r2_hat = proj.r2_hat;
  report.wald = diag;
  return report;
}

}  // namespace cace
