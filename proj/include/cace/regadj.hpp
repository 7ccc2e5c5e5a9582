#pragma once

#include "cace/regression.hpp"
#include "cace/wald.hpp"

namespace cace {

enum class IttOutcome { W, Y };

// Coefficient on Z in OLS of the outcome on (1, Z, x*, Z x*), where x* are
// the covariates centered at their full-sample means.  Checked internally
// against the two-group decomposition ITT-hat - b1'xbar1* + b0'xbar0*.
double adjusted_itt(const ObservedDataset& obs, IttOutcome outcome);

// ITT_Y^adj / ITT_W^adj; throws NonpositiveIttW.
double tau_adj(const ObservedDataset& obs);

// Interval tau_adj +- nu_{1-alpha/2} sqrt(V_variant) / ITT_W^adj, where V is
// the robust variance of the Z coefficient in the interacted regression of
// A-hat^adj = y - w tau_adj.
EstimateReport ci_adj(const ObservedDataset& obs, double alpha, RobustVariant variant);

}  // namespace cace
