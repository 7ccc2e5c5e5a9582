#include "cace/lka.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "cace/dist.hpp"

namespace cace {

namespace {

std::uint64_t seed_from_spec(const MixtureQuantileSpec& spec) {
  return derive_seed({spec.seed, static_cast<std::uint64_t>(spec.k),
                      std::bit_cast<std::uint64_t>(spec.a),
                      static_cast<std::uint64_t>(spec.draws)});
}

long snap_r2(double r2) { return std::lround(std::clamp(r2, 0.0, 1.0) * 1000.0); }

void fill_samples(const MixtureQuantileSpec& spec, std::vector<double>& eps,
                  std::vector<double>& l) {
  Rng rng(seed_from_spec(spec));
  eps.resize(spec.draws);
  l.resize(spec.draws);
  for (long i = 0; i < spec.draws; ++i) {
    eps[i] = sample_normal(rng);
    l[i] = sample_l(spec.k, spec.a, rng);
  }
}

double empirical_quantile(std::vector<double>& values, double p) {
  const auto n = static_cast<long>(values.size());
  long idx = std::clamp(static_cast<long>(p * n), 0L, n - 1);
  std::nth_element(values.begin(), values.begin() + idx, values.end());
  return values[idx];
}

double quantile_from_samples(const std::vector<double>& eps, const std::vector<double>& l,
                             double r2, double p) {
  const double w_eps = std::sqrt(1.0 - r2);
  const double w_l = std::sqrt(r2);
  std::vector<double> mix(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) mix[i] = w_eps * eps[i] + w_l * l[i];
  return empirical_quantile(mix, p);
}

}  // namespace

double truncated_chi_sample(int k, double a, Rng& rng) {
  if (std::isinf(a)) return std::sqrt(sample_chi2(static_cast<double>(k), rng));
  const double cap = chi2_cdf(a, static_cast<double>(k));
  const double u = rng.uniform() * cap;
  const double x = chi2_quantile(std::max(u, 1e-300), static_cast<double>(k));
  return std::sqrt(std::min(x, a));
}

double sample_l(int k, double a, Rng& rng) {
  const double chi = truncated_chi_sample(k, a, rng);
  const double sign = (rng.uniform() < 0.5) ? -1.0 : 1.0;
  // beta_K degenerates to 1 when K = 1
  const double beta = (k == 1) ? 1.0 : sample_beta(0.5, 0.5 * (k - 1), rng);
  return chi * sign * std::sqrt(beta);
}

double mixture_quantile(const MixtureQuantileSpec& spec) {
  std::vector<double> eps, l;
  fill_samples(spec, eps, l);
  const double r2 = snap_r2(spec.r2) / 1000.0;
  return quantile_from_samples(eps, l, r2, spec.p);
}

std::shared_ptr<const QuantileCache::Samples> QuantileCache::samples_for(
    const MixtureQuantileSpec& spec) {
  const SampleKey key{spec.k, std::bit_cast<std::uint64_t>(spec.a), spec.draws, spec.seed};
  {
    std::lock_guard lock(mutex_);
    auto it = samples_.find(key);
    if (it != samples_.end()) return it->second;
  }
  // generate outside the lock; duplicated concurrent work is idempotent
  auto samples = std::make_shared<Samples>();
  fill_samples(spec, samples->eps, samples->l);
  std::lock_guard lock(mutex_);
  auto [it, inserted] = samples_.emplace(key, std::move(samples));
  return it->second;
}

double QuantileCache::quantile(const MixtureQuantileSpec& spec) {
  const long r2_key = snap_r2(spec.r2);
  const QuantileKey qkey{spec.k, std::bit_cast<std::uint64_t>(spec.a), spec.draws,
                         spec.seed,  r2_key, std::bit_cast<std::uint64_t>(spec.p)};
  {
    std::lock_guard lock(mutex_);
    auto it = quantiles_.find(qkey);
    if (it != quantiles_.end()) return it->second;
  }
  auto samples = samples_for(spec);
  const double q = quantile_from_samples(samples->eps, samples->l, r2_key / 1000.0, spec.p);
  std::lock_guard lock(mutex_);
  quantiles_.emplace(qkey, q);
  return q;
}

}  // namespace cace
