#include "doctest.h"

#include <cmath>

#include "cace/bayes.hpp"
#include "cace/design.hpp"
#include "cace/dist.hpp"

using namespace cace;

namespace {

// data generated from the model itself: L(0) = -0.5 + x + e, alpha = 1,
// Y(z) = z * effect + x + eps_z with independent errors
ObservedDataset model_dataset(int n, double effect, Rng& rng) {
  ObservedDataset obs;
  obs.x.resize(n, 1);
  obs.z.resize(n);
  obs.w_obs.resize(n);
  obs.y_obs.resize(n);
  const Assignment a = sample_cre(n, n / 2, rng);
  obs.z = a.z;
  for (int i = 0; i < n; ++i) {
    obs.x(i, 0) = sample_normal(rng);
    const double l0 = -0.5 + obs.x(i, 0) + sample_normal(rng);
    const double lz = l0 + (obs.z[i] ? 1.0 : 0.0);
    obs.w_obs[i] = lz > 0.0 ? 1 : 0;
    obs.y_obs[i] = effect * obs.w_obs[i] + obs.x(i, 0) + sample_normal(rng);
  }
  return obs;
}

ParameterState flat_state(int k) {
  ParameterState s;
  s.gamma0 = Vector::Zero(k + 1);
  s.gamma1 = Vector::Zero(k + 1);
  s.beta = Vector::Zero(k + 1);
  s.alpha = 1.0;
  return s;
}

}  // namespace

TEST_CASE("initial state is sign consistent with observed uptake") {
  Rng rng(51);
  const ObservedDataset obs = model_dataset(80, 1.0, rng);
  const ParameterState s = init_state(obs, rng);
  REQUIRE(s.latents.size() == obs.n());
  CHECK(s.alpha > 0.0);
  for (Eigen::Index i = 0; i < obs.n(); ++i)
    CHECK((s.latents[i] > 0.0) == (obs.w_obs[i] == 1));
}

TEST_CASE("full sweeps keep alpha positive and latents sign consistent") {
  Rng rng(52);
  const ObservedDataset obs = model_dataset(100, 1.0, rng);
  BayesConfig cfg;
  ParameterState s = init_state(obs, rng);
  for (int it = 0; it < 150; ++it) {
    step1_covariance(s, obs, cfg, rng);
    step2_outcome_coefs(s, obs, cfg, rng);
    step3_latent_coefs(s, obs, cfg, rng);
    step4_latents(s, obs, rng);
    CHECK(s.alpha > 0.0);
    CHECK(s.sig0e2 > 0.0);
    CHECK(s.sig1e2 > 0.0);
    for (Eigen::Index i = 0; i < obs.n(); ++i)
      CHECK((s.latents[i] > 0.0) == (obs.w_obs[i] == 1));
  }
}

TEST_CASE("compliance imputation hand probabilities") {
  // all coefficients zero, unit error scale: a control unit with W = 0 is a
  // complier iff e in (-alpha, 0]; given W = 0 (e <= 0) the probability is
  // (Phi(0) - Phi(-alpha)) / Phi(0)
  const int n = 40000;
  ObservedDataset obs;
  obs.x = Matrix::Zero(n, 1);
  obs.z = IntVector::Zero(n);
  obs.w_obs = IntVector::Zero(n);
  obs.y_obs = Vector::Zero(n);
  for (int i = n / 2; i < n; ++i) {
    obs.z[i] = 1;
    obs.w_obs[i] = 1;
  }
  ParameterState s = flat_state(1);
  s.alpha = 1.6448536269514722;  // Phi(-alpha) = 0.05
  Rng rng(53);
  const IntVector co = impute_compliance(s, obs, rng);

  double rate0 = 0.0, rate1 = 0.0;
  for (int i = 0; i < n / 2; ++i) rate0 += co[i];
  for (int i = n / 2; i < n; ++i) rate1 += co[i];
  rate0 /= n / 2;
  rate1 /= n / 2;
  CHECK(rate0 == doctest::Approx(0.45 / 0.5).epsilon(0.02));
  CHECK(rate1 == doctest::Approx(0.45 / 0.95).epsilon(0.02));

  SUBCASE("a wide complier window makes everyone a complier") {
    // e in (-alpha - beta0, -beta0] = (-50, 50] swallows both tails
    s.beta[0] = -50.0;
    s.alpha = 100.0;
    Rng rng2(54);
    const IntVector all = impute_compliance(s, obs, rng2);
    CHECK(all.sum() == n);
  }
}

TEST_CASE("missing outcome identity when errors are uncorrelated and symmetric") {
  // pi = 0 and equal conditional variances: the imputed residual equals the
  // observed one, so Y_mis just swaps the outcome regression
  ObservedDataset obs;
  obs.x.resize(2, 1);
  obs.x << 0.4, -1.0;
  obs.z = IntVector(2);
  obs.w_obs = IntVector(2);
  obs.y_obs = Vector(2);
  obs.z << 1, 0;
  obs.w_obs << 1, 0;
  obs.y_obs << 3.0, 0.25;

  ParameterState s = flat_state(1);
  s.gamma0 << 1.0, 0.5;
  s.gamma1 << 2.0, -0.3;
  s.latents = Vector(2);
  s.latents << 0.5, -0.5;
  IntVector co(2);
  co << 1, 1;

  const Vector y_mis = impute_missing_outcomes(s, obs, co);
  // unit 0 (treated): eps1 = 3 - 2 + 0.3*0.4 = 1.12; Y_mis = 1 + 0.5*0.4 + 1.12
  CHECK(y_mis[0] == doctest::Approx(1.0 + 0.2 + 1.12).epsilon(1e-10));
  // unit 1 (control): eps0 = 0.25 - 1 + 0.5 = -0.25; Y_mis = 2 + 0.3 - 0.25
  CHECK(y_mis[1] == doctest::Approx(2.0 + 0.3 - 0.25).epsilon(1e-10));
}

TEST_CASE("effect draw from imputed outcomes by hand") {
  ObservedDataset obs;
  obs.x = Matrix::Zero(4, 0);
  obs.z = IntVector(4);
  obs.w_obs = IntVector(4);
  obs.y_obs = Vector(4);
  obs.z << 1, 1, 0, 0;
  obs.w_obs << 1, 0, 0, 0;
  obs.y_obs << 5.0, 2.0, 1.0, 7.0;
  IntVector co(4);
  co << 1, 0, 1, 0;
  Vector y_mis(4);
  y_mis << 3.0, 0.0, 4.0, 0.0;
  // unit 0: W = 1 -> +(5 - 3) = 2; unit 2: W = 0 -> -(1 - 4) = 3
  CHECK(tau_draw(obs, co, y_mis) == doctest::Approx(2.5).epsilon(1e-12));

  IntVector none = IntVector::Zero(4);
  CHECK_THROWS_AS(tau_draw(obs, none, y_mis), NoImputedCompliers);
}

TEST_CASE("posterior run is deterministic in the seed") {
  Rng rng(55);
  const ObservedDataset obs = model_dataset(60, 1.0, rng);
  BayesConfig cfg;
  cfg.chains = 2;
  cfg.iters_per_chain = 120;
  cfg.burn_in = 60;
  cfg.seed = 99;
  const PosteriorSummary a = run_posterior(obs, cfg);
  const PosteriorSummary b = run_posterior(obs, cfg);
  REQUIRE(a.tau_draws.size() == b.tau_draws.size());
  for (std::size_t i = 0; i < a.tau_draws.size(); ++i) CHECK(a.tau_draws[i] == b.tau_draws[i]);
  CHECK(a.mean == b.mean);
  CHECK(a.ci_lo == b.ci_lo);
  CHECK(a.ci_hi == b.ci_hi);

  cfg.seed = 100;
  const PosteriorSummary c = run_posterior(obs, cfg);
  CHECK(a.mean != c.mean);
}

TEST_CASE("posterior recovers a null effect and a sensible complier share") {
  Rng rng(56);
  const ObservedDataset obs = model_dataset(160, 0.0, rng);
  BayesConfig cfg;
  cfg.chains = 2;
  cfg.iters_per_chain = 500;
  cfg.burn_in = 250;
  cfg.seed = 7;
  const PosteriorSummary post = run_posterior(obs, cfg);
  CHECK(post.ci_lo < 0.0);
  CHECK(post.ci_hi > 0.0);
  CHECK(std::fabs(post.mean) < 0.5);
  double pco = 0.0;
  for (double p : post.pco_draws) pco += p;
  pco /= post.pco_draws.size();
  CHECK(pco > 0.1);
  CHECK(pco < 0.9);
}
