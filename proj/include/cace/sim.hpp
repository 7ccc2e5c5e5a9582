#pragma once

#include <cstdint>
#include <vector>

#include "cace/bayes.hpp"
#include "cace/design.hpp"
#include "cace/lka.hpp"
#include "cace/population.hpp"

namespace cace {

enum class SimMethod { Wald, AdjEHW, AdjHC2, AdjHC3, Bayes };

const char* method_name(SimMethod m);

struct DgpConfig {
  int dgp = 1;  // 1: linear; 2: adds squared-covariate terms with phi = 0.4
  int n = 200;
  int k = 5;
  double p_co = 0.85;  // target complier fraction
  int error_case = 1;  // 1-2 joint normal (rho 0 / 0.5); 3-4 normal+exponential mixtures
  std::uint64_t seed = 0;
};

struct Kappas {
  double k0 = 1.0;  // scales eps0 so Var(kappa0 * eps0) = 1
  double k1 = 1.0;
  double k2 = 1.0;
};

// Intercept of the latent uptake equation, ((p_co-0.5)/0.35+1)(1-phi)sqrt(k).
double delta0_value(double p_co, int dgp, int k);

// Chosen so each structural equation has squared multiple correlation 0.5:
// the error variance matches the systematic-part variance.
Kappas calibrate_kappas(int dgp, int k);

struct ErrorDraws {
  Vector eps0;
  Vector eps1;
  Vector u;
};

// Error triples with unit variance after kappa-scaling, correlation rho
// between u and each eps (rho = 0 cases 1,3; rho = 0.5 cases 2,4).  Cases 3-4
// mix a normal part (80% of variance, carrying all cross-correlations) with
// independent centered exponentials (20%).
ErrorDraws generate_errors(int n, int error_case, const Kappas& kappas, Rng& rng);

FinitePopulation generate_population(const DgpConfig& cfg);

struct Metrics {
  double mae = 0.0;
  double crate = 0.0;
  double len = 0.0;
};

Metrics metrics(const std::vector<double>& estimates,
                const std::vector<std::pair<double, double>>& intervals, double truth);

struct MethodResult {
  SimMethod method = SimMethod::Wald;
  Metrics m;
  long removed = 0;  // replications dropped for this method (NonpositiveIttW)
};

struct SimSettingResult {
  double truth = 0.0;
  std::vector<MethodResult> methods;
};

struct SimOptions {
  int threads = 1;
  double alpha = 0.05;
  BayesConfig bayes;  // seed field unused; per-replication seeds are derived
  long lka_draws = 1'000'000;
  std::uint64_t lka_seed = 0;
};

// Fixes one population from cfg, redraws Z `reps` times under the design,
// and scores every requested method against the fixed sample CACE.
SimSettingResult run_setting(const DgpConfig& cfg, const DesignSpec& design,
                             const std::vector<SimMethod>& methods, int reps,
                             std::uint64_t seed, const SimOptions& options);

}  // namespace cace
