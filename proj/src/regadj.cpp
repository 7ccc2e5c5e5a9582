#include "cace/regadj.hpp"

#include <cmath>

#include "cace/dist.hpp"

namespace cace {

namespace {

// (1, Z, x*, Z x*) with x* centered at full-sample column means
Matrix interacted_design(const ObservedDataset& obs) {
  const Eigen::Index n = obs.n();
  const Eigen::Index k = obs.k();
  const Matrix xc = center_columns(obs.x);
  Matrix design(n, 2 + 2 * k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = static_cast<double>(obs.z[i]);
    design(i, 0) = 1.0;
    design(i, 1) = z;
    design.row(i).segment(2, k) = xc.row(i);
    design.row(i).segment(2 + k, k) = z * xc.row(i);
  }
  return design;
}

void check_sizes(const ObservedDataset& obs) {
  const Eigen::Index k = obs.k();
  if (obs.n() <= 2 * k + 2)
    throw ArmTooSmall("adjusted_itt: need more than 2k+2 units");
  Eigen::Index n1 = 0;
  for (Eigen::Index i = 0; i < obs.n(); ++i) n1 += obs.z[i];
  if (n1 <= k + 1 || obs.n() - n1 <= k + 1)
    throw ArmTooSmall("adjusted_itt: each arm needs more than k+1 units");
}

double z_coefficient(const ObservedDataset& obs, const Vector& outcome) {
  check_sizes(obs);
  const Matrix design = interacted_design(obs);
  const OlsFit fit = ols_fit(design, outcome);
  const double coef = fit.coefs[1];

  // cross-check against the two-group form: ITT-hat - b1'xbar1* + b0'xbar0*,
  // with bz from separate per-arm regressions on centered covariates
  const Eigen::Index k = obs.k();
  if (k > 0) {
    const Matrix xc = center_columns(obs.x);
    double itt = 0.0;
    double two_group = 0.0;
    for (int arm = 0; arm <= 1; ++arm) {
      std::vector<Eigen::Index> idx;
      for (Eigen::Index i = 0; i < obs.n(); ++i)
        if (obs.z[i] == arm) idx.push_back(i);
      Matrix design_arm(idx.size(), 1 + k);
      Vector y_arm(idx.size());
      double mean = 0.0;
      Eigen::RowVectorXd xbar = Eigen::RowVectorXd::Zero(k);
      for (std::size_t r = 0; r < idx.size(); ++r) {
        design_arm(r, 0) = 1.0;
        design_arm.row(r).tail(k) = xc.row(idx[r]);
        y_arm[r] = outcome[idx[r]];
        mean += outcome[idx[r]];
        xbar += xc.row(idx[r]);
      }
      mean /= static_cast<double>(idx.size());
      xbar /= static_cast<double>(idx.size());
      const OlsFit arm_fit = ols_fit(design_arm, y_arm);
      const double sign = arm ? 1.0 : -1.0;
      itt += sign * mean;
      two_group -= sign * (xbar * arm_fit.coefs.tail(k))(0);
    }
    two_group += itt;
    const double scale = std::max({1.0, std::fabs(coef), std::fabs(two_group)});
    if (std::fabs(coef - two_group) > 1e-9 * scale)
      throw NumericalError("adjusted_itt: interacted and two-group forms disagree");
  }
  return coef;
}

}  // namespace

double adjusted_itt(const ObservedDataset& obs, IttOutcome outcome) {
  if (outcome == IttOutcome::W) return z_coefficient(obs, obs.w_obs.cast<double>());
  return z_coefficient(obs, obs.y_obs);
}

double tau_adj(const ObservedDataset& obs) {
  const double itt_w = adjusted_itt(obs, IttOutcome::W);
  if (!(itt_w > 0.0))
    throw NonpositiveIttW("tau_adj: adjusted complier fraction is not positive");
  return adjusted_itt(obs, IttOutcome::Y) / itt_w;
}

EstimateReport ci_adj(const ObservedDataset& obs, double alpha, RobustVariant variant) {
  const double itt_w = adjusted_itt(obs, IttOutcome::W);
  if (!(itt_w > 0.0))
    throw NonpositiveIttW("ci_adj: adjusted complier fraction is not positive");
  const double itt_y = adjusted_itt(obs, IttOutcome::Y);
  const double tau = itt_y / itt_w;

  const Vector a_adj = obs.y_obs - tau * obs.w_obs.cast<double>();
  const Matrix design = interacted_design(obs);
  const OlsFit fit = ols_fit(design, a_adj);

  AdjDiagnostics diag;
  diag.itt_w_adj = itt_w;
  diag.itt_y_adj = itt_y;
  diag.v_ehw = robust_cov(fit, design, RobustVariant::EHW)(1, 1);
  diag.v_hc2 = robust_cov(fit, design, RobustVariant::HC2)(1, 1);
  diag.v_hc3 = robust_cov(fit, design, RobustVariant::HC3)(1, 1);

  double v = diag.v_ehw;
  std::string name = "adj-ehw";
  if (variant == RobustVariant::HC2) {
    v = diag.v_hc2;
    name = "adj-hc2";
  } else if (variant == RobustVariant::HC3) {
    v = diag.v_hc3;
    name = "adj-hc3";
  }
  const double nu = normal_quantile(1.0 - alpha / 2.0);
  const double half = nu * std::sqrt(v) / itt_w;

  EstimateReport report;
  report.method = name;
  report.point = tau;
  report.ci_lo = tau - half;
  report.ci_hi = tau + half;
  report.alpha = alpha;
  report.adj = diag;
  return report;
}

}  // namespace cace
