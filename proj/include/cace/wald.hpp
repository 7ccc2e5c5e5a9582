#pragma once

#include <optional>
#include <string>

#include "cace/lka.hpp"
#include "cace/population.hpp"

namespace cace {

struct WaldDiagnostics {
  double itt_w = 0.0;
  double itt_y = 0.0;
  double var_tilde = 0.0;    // Var-hat of tau_tilde_A under CRE
  double var_tilde_x = 0.0;  // covariate-projected variant (ReM)
  double r2_hat = 0.0;       // clamped to [0, 1]
};

struct AdjDiagnostics {
  double itt_w_adj = 0.0;
  double itt_y_adj = 0.0;
  double v_ehw = 0.0;
  double v_hc2 = 0.0;
  double v_hc3 = 0.0;
};

struct EstimateReport {
  std::string method;
  double point = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double alpha = 0.05;
  std::optional<WaldDiagnostics> wald;
  std::optional<AdjDiagnostics> adj;
};

// Which plug-in covariate covariance backs the R^2 projections: the pooled
// finite population S_xx, or the within-arm covariance per arm.
enum class SxxMode { Pooled, PerArm };

double itt_w_hat(const ObservedDataset& obs);
double itt_y_hat(const ObservedDataset& obs);

// ITT_Y / ITT_W; throws NonpositiveIttW when the denominator is <= 0.
double wald_estimate(const ObservedDataset& obs);

// A-hat_i = y_obs_i - w_obs_i * tau
Vector a_hat_residuals(const ObservedDataset& obs, double tau);

// S^2_{A-hat(1)}/n1 + S^2_{A-hat(0)}/n0
double var_tilde_cre(const ObservedDataset& obs, double tau);

EstimateReport ci_wald_cre(const ObservedDataset& obs, double alpha);

struct ProjectedQuantities {
  double var_tilde_x = 0.0;
  double r2_hat = 0.0;
  double s2_proj_arm1 = 0.0;  // S^2_{A-hat_1 | x}
  double s2_proj_arm0 = 0.0;  // S^2_{A-hat_0 | x}
  double s2_proj_diff = 0.0;  // S^2_{A-hat_01 | x}
};

ProjectedQuantities projected_quantities(const ObservedDataset& obs, double tau,
                                         SxxMode mode = SxxMode::Pooled);

// ReM interval: point +- lambda_{1-alpha/2,a}(R2-hat) sqrt(var_x) / ITT_W.
// The lambda quantile comes from the mixture reference distribution; cache
// may be null for a one-shot computation.
EstimateReport ci_wald_rem(const ObservedDataset& obs, double alpha, double threshold_a,
                           const MixtureQuantileSpec& mc_spec, QuantileCache* cache = nullptr,
                           SxxMode mode = SxxMode::Pooled);

}  // namespace cace
