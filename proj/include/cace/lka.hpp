#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "cace/rng.hpp"

namespace cace {

// Quantiles of the rerandomization reference distribution
//   sqrt(1 - r2) * eps0 + sqrt(r2) * L_{K,a},
// where eps0 is standard normal and L_{K,a} = chi_{K,a} * F * sqrt(beta_K).
struct MixtureQuantileSpec {
  int k = 1;
  double a = 0.0;  // may be +infinity
  double r2 = 0.0;
  double p = 0.975;
  long draws = 1'000'000;
  std::uint64_t seed = 0;
};

// sqrt of chi^2_K conditioned on <= a.  Sampled by inverse CDF so tiny
// acceptance regions cost no rejection loop.
double truncated_chi_sample(int k, double a, Rng& rng);

// One draw of L_{K,a}; |L| <= sqrt(a) always.
double sample_l(int k, double a, Rng& rng);

// Empirical p-quantile over spec.draws mixture samples, deterministic in
// (spec fields, seed).  r2 is snapped to a 1e-3 grid.
double mixture_quantile(const MixtureQuantileSpec& spec);

// Shared read-mostly cache.  The (eps0, L) sample arrays are keyed by
// (k, a, draws, seed) and reused across r2 grid points; resolved quantiles
// are memoized per (key, r2, p).
class QuantileCache {
 public:
  double quantile(const MixtureQuantileSpec& spec);

 private:
  struct Samples {
    std::vector<double> eps;
    std::vector<double> l;
  };
  using SampleKey = std::tuple<int, std::uint64_t, long, std::uint64_t>;
  using QuantileKey = std::tuple<int, std::uint64_t, long, std::uint64_t, long, std::uint64_t>;

  std::shared_ptr<const Samples> samples_for(const MixtureQuantileSpec& spec);

  std::mutex mutex_;
  std::map<SampleKey, std::shared_ptr<const Samples>> samples_;
  std::map<QuantileKey, double> quantiles_;
};

}  // namespace cace
