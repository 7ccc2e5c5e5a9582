#pragma once

#include <cstdint>
#include <vector>

#include "cace/population.hpp"
#include "cace/rng.hpp"

namespace cace {

struct BayesConfig {
  int chains = 4;
  int iters_per_chain = 2500;
  int burn_in = 1250;
  std::uint64_t seed = 0;
  double prior_coef_var = 100.0;  // prior precision 0.01 on all coefficients
  double ig_shape = 0.01;
  double ig_scale = 0.01;
};

// Model: L_i(0) = beta0 + beta'x_i + e_i, L_i(1) = L_i(0) + alpha, e_i ~ N(0,1);
// Y_i(z) = gamma_z0 + gamma_z'x_i + eps_iz with Cov(eps_iz, e_i) = pi_z,
// Var(eps_iz) = sig_z^2.  Reparameterized as pi_{z|e} = pi_z and
// sig2_{z|e} = sig_z^2 - pi_z^2 (regression of eps on e).
struct ParameterState {
  Vector gamma0;  // (gamma_00, gamma_0), length k+1
  Vector gamma1;
  Vector beta;  // (beta_0, beta), length k+1
  double alpha = 1.0;
  double pi0e = 0.0;
  double pi1e = 0.0;
  double sig0e2 = 1.0;
  double sig1e2 = 1.0;
  Vector latents;  // l_i = L_i(Z_i)
};

struct PosteriorSummary {
  std::vector<double> tau_draws;
  std::vector<double> pco_draws;
  double mean = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;  // 0.025 / 0.975 empirical quantiles
  long skipped_draws = 0;
  double split_rhat = 0.0;  // advisory only; NaN when undefined
};

ParameterState init_state(const ObservedDataset& obs, Rng& rng);

void step1_covariance(ParameterState& state, const ObservedDataset& obs, const BayesConfig& cfg,
                      Rng& rng);
void step2_outcome_coefs(ParameterState& state, const ObservedDataset& obs,
                         const BayesConfig& cfg, Rng& rng);
void step3_latent_coefs(ParameterState& state, const ObservedDataset& obs,
                        const BayesConfig& cfg, Rng& rng);
void step4_latents(ParameterState& state, const ObservedDataset& obs, Rng& rng);

// Complier indicators; only units with W_obs = Z can be compliers.
IntVector impute_compliance(const ParameterState& state, const ObservedDataset& obs, Rng& rng);

// Rao-Blackwellized missing outcome for each complier (rho = 1 between the
// residual errors); entries for non-compliers are 0 and must not be read.
Vector impute_missing_outcomes(const ParameterState& state, const ObservedDataset& obs,
                               const IntVector& compliers);

// sum I_co (2W-1)(Y_obs - Y_mis) / sum I_co; throws NoImputedCompliers.
double tau_draw(const ObservedDataset& obs, const IntVector& compliers, const Vector& y_mis);

PosteriorSummary run_posterior(const ObservedDataset& obs, const BayesConfig& cfg);

}  // namespace cace
