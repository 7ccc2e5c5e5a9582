#include "cace/population.hpp"

namespace cace {

LatentGroup latent_group(int w0, int w1) {
  if (w0 == 1 && w1 == 1) return LatentGroup::AlwaysTaker;
  if (w0 == 0 && w1 == 1) return LatentGroup::Complier;
  if (w0 == 0 && w1 == 0) return LatentGroup::NeverTaker;
  throw DefierPresent("latent_group: w0=1, w1=0 violates monotonicity");
}

void validate(const FinitePopulation& pop) {
  const Eigen::Index n = pop.y0.size();
  if (pop.y1.size() != n || pop.w0.size() != n || pop.w1.size() != n ||
      (pop.x.size() > 0 && pop.x.rows() != n)) {
    throw LengthMismatch("population: field lengths disagree");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if ((pop.w0[i] != 0 && pop.w0[i] != 1) || (pop.w1[i] != 0 && pop.w1[i] != 1))
      throw LengthMismatch("population: w0/w1 must be 0/1");
    if (pop.w1[i] < pop.w0[i])
      throw DefierPresent("population: unit " + std::to_string(i) + " has w1 < w0");
  }
}

ObservedDataset reveal(const FinitePopulation& pop, const Assignment& a) {
  const Eigen::Index n = pop.y0.size();
  if (a.z.size() != n) throw LengthMismatch("reveal: assignment length differs from population");
  ObservedDataset obs;
  obs.x = pop.x;
  obs.z = a.z;
  obs.w_obs.resize(n);
  obs.y_obs.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int w = a.z[i] ? pop.w1[i] : pop.w0[i];
    obs.w_obs[i] = w;
    obs.y_obs[i] = w ? pop.y1[i] : pop.y0[i];
  }
  return obs;
}

double sample_cace(const FinitePopulation& pop) {
  double sum = 0.0;
  int n_co = 0;
  for (Eigen::Index i = 0; i < pop.n(); ++i) {
    if (pop.w1[i] - pop.w0[i] == 1) {
      sum += pop.y1[i] - pop.y0[i];
      ++n_co;
    }
  }
  if (n_co == 0) throw NoCompliers("sample_cace: population has no compliers");
  return sum / n_co;
}

double true_itt_w(const FinitePopulation& pop) {
  return (pop.w1 - pop.w0).cast<double>().mean();
}

double true_itt_y(const FinitePopulation& pop) {
  // Y_i(z, W_i(z)) depends on z only through treatment received
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pop.n(); ++i) {
    const double y_treat = pop.w1[i] ? pop.y1[i] : pop.y0[i];
    const double y_ctrl = pop.w0[i] ? pop.y1[i] : pop.y0[i];
    sum += y_treat - y_ctrl;
  }
  return sum / static_cast<double>(pop.n());
}

}  // namespace cace
