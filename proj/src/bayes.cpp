#include "cace/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "cace/dist.hpp"

namespace cace {

namespace {

// e_i = L_i(0) - beta_0 - beta'x_i = l_i - alpha Z_i - beta_0 - beta'x_i
Vector latent_residuals(const ParameterState& st, const ObservedDataset& obs) {
  const Eigen::Index n = obs.n();
  Vector e(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    e[i] = st.latents[i] - st.alpha * obs.z[i] - st.beta[0] -
           obs.x.row(i).dot(st.beta.tail(obs.k()));
  }
  return e;
}

// eps_{i,W_i} = Y_obs - gamma_{W_i,0} - gamma_{W_i}'x_i (only the observed arm)
Vector outcome_residuals(const ParameterState& st, const ObservedDataset& obs) {
  const Eigen::Index n = obs.n();
  Vector eps(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector& g = obs.w_obs[i] ? st.gamma1 : st.gamma0;
    eps[i] = obs.y_obs[i] - g[0] - obs.x.row(i).dot(g.tail(obs.k()));
  }
  return eps;
}

double sample_inverse_gamma(double shape, double scale, Rng& rng) {
  return scale / sample_gamma(shape, rng);
}

// draw from N(Prec^{-1} rhs, Prec^{-1}) given the precision matrix
Vector sample_mvn_from_precision(const Matrix& prec, const Vector& rhs, Rng& rng) {
  Eigen::LLT<Matrix> llt(prec);
  if (llt.info() != Eigen::Success)
    throw SingularCovariance("bayes: conditional precision matrix is not positive definite");
  const Vector mean = llt.solve(rhs);
  Vector z(rhs.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = sample_normal(rng);
  // prec = L L', so solving L' u = z gives Cov(u) = prec^{-1}
  return mean + llt.matrixU().solve(z);
}

struct ImputationGeometry {
  double lo = 0.0;    // -alpha - beta_0 - beta'x
  double hi = 0.0;    // -beta_0 - beta'x
  double mean = 0.0;  // E(e | eps, observed arm)
  double sd = 1.0;
};

ImputationGeometry e_conditional(const ParameterState& st, const ObservedDataset& obs,
                                 Eigen::Index i, double eps_i) {
  const int w = obs.w_obs[i];
  const double pi_z = w ? st.pi1e : st.pi0e;
  const double sig2_z = (w ? st.sig1e2 : st.sig0e2) + pi_z * pi_z;
  ImputationGeometry g;
  const double xb = st.beta[0] + obs.x.row(i).dot(st.beta.tail(obs.k()));
  g.lo = -st.alpha - xb;
  g.hi = -xb;
  g.mean = pi_z * eps_i / sig2_z;
  g.sd = std::sqrt(std::max(1.0 - pi_z * pi_z / sig2_z, 1e-12));
  return g;
}

double empirical_quantile_sorted(const std::vector<double>& sorted, double p) {
  const auto n = static_cast<long>(sorted.size());
  const long idx = std::clamp(static_cast<long>(p * n), 0L, n - 1);
  return sorted[idx];
}

struct ChainResult {
  std::vector<double> tau;
  std::vector<double> pco;
  long skipped = 0;
};

ChainResult run_chain(const ObservedDataset& obs, const BayesConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  ParameterState st = init_state(obs, rng);
  ChainResult out;
  out.tau.reserve(cfg.iters_per_chain - cfg.burn_in);
  for (int iter = 0; iter < cfg.iters_per_chain; ++iter) {
    step1_covariance(st, obs, cfg, rng);
    step2_outcome_coefs(st, obs, cfg, rng);
    step3_latent_coefs(st, obs, cfg, rng);
    step4_latents(st, obs, rng);
    const IntVector compliers = impute_compliance(st, obs, rng);
    if (iter < cfg.burn_in) continue;
    const long n_co = compliers.cast<long>().sum();
    if (n_co == 0) {
      ++out.skipped;
      continue;
    }
    const Vector y_mis = impute_missing_outcomes(st, obs, compliers);
    out.tau.push_back(tau_draw(obs, compliers, y_mis));
    out.pco.push_back(static_cast<double>(n_co) / static_cast<double>(obs.n()));
  }
  return out;
}

// split-R-hat over equal-length halves of each chain's tau draws (advisory)
double split_rhat(const std::vector<ChainResult>& chains) {
  std::vector<std::vector<double>> halves;
  for (const auto& c : chains) {
    const std::size_t h = c.tau.size() / 2;
    if (h < 2) continue;
    halves.emplace_back(c.tau.begin(), c.tau.begin() + h);
    halves.emplace_back(c.tau.begin() + h, c.tau.begin() + 2 * h);
  }
  if (halves.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = static_cast<double>(halves.size());
  const double len = static_cast<double>(halves[0].size());
  std::vector<double> means;
  double w = 0.0;
  for (const auto& h : halves) {
    double mu = 0.0;
    for (double v : h) mu += v;
    mu /= static_cast<double>(h.size());
    means.push_back(mu);
    double ss = 0.0;
    for (double v : h) ss += (v - mu) * (v - mu);
    w += ss / (static_cast<double>(h.size()) - 1.0);
  }
  w /= m;
  double grand = 0.0;
  for (double mu : means) grand += mu;
  grand /= m;
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= len / (m - 1.0);
  if (!(w > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(((len - 1.0) / len * w + b / len) / w);
}

}  // namespace

ParameterState init_state(const ObservedDataset& obs, Rng& rng) {
  const Eigen::Index n = obs.n();
  const Eigen::Index k = obs.k();
  ParameterState st;
  st.gamma0 = Vector::Zero(k + 1);
  st.gamma1 = Vector::Zero(k + 1);
  st.beta = Vector::Zero(k + 1);
  st.alpha = 1.0;
  st.latents.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    st.latents[i] = obs.w_obs[i] ? sample_truncnorm_above(0.0, 1.0, 0.0, rng)
                                 : sample_truncnorm_below(0.0, 1.0, 0.0, rng);
  }
  return st;
}

void step1_covariance(ParameterState& state, const ObservedDataset& obs, const BayesConfig& cfg,
                      Rng& rng) {
  const Vector e = latent_residuals(state, obs);
  const Vector eps = outcome_residuals(state, obs);
  const double prior_prec = 1.0 / cfg.prior_coef_var;
  for (int arm = 0; arm <= 1; ++arm) {
    double& pi = arm ? state.pi1e : state.pi0e;
    double& sig2 = arm ? state.sig1e2 : state.sig0e2;

    double a = cfg.ig_shape;
    double b = cfg.ig_scale;
    for (Eigen::Index i = 0; i < obs.n(); ++i) {
      if (obs.w_obs[i] != arm) continue;
      a += 0.5;
      const double r = eps[i] - pi * e[i];
      b += 0.5 * r * r;
    }
    sig2 = sample_inverse_gamma(a, b, rng);

    double ee = 0.0;
    double ee_eps = 0.0;
    for (Eigen::Index i = 0; i < obs.n(); ++i) {
      if (obs.w_obs[i] != arm) continue;
      ee += e[i] * e[i];
      ee_eps += e[i] * eps[i];
    }
    const double a_post = 1.0 / (ee / sig2 + prior_prec);
    const double mu_post = a_post * ee_eps / sig2;
    pi = mu_post + std::sqrt(a_post) * sample_normal(rng);
  }
}

void step2_outcome_coefs(ParameterState& state, const ObservedDataset& obs,
                         const BayesConfig& cfg, Rng& rng) {
  const Vector e = latent_residuals(state, obs);
  const Eigen::Index k = obs.k();
  const double prior_prec = 1.0 / cfg.prior_coef_var;
  for (int arm = 0; arm <= 1; ++arm) {
    const double pi = arm ? state.pi1e : state.pi0e;
    const double sig = std::sqrt(arm ? state.sig1e2 : state.sig0e2);
    Matrix prec = prior_prec * Matrix::Identity(k + 1, k + 1);
    Vector rhs = Vector::Zero(k + 1);
    Vector row(k + 1);
    for (Eigen::Index i = 0; i < obs.n(); ++i) {
      if (obs.w_obs[i] != arm) continue;
      row[0] = 1.0;
      row.tail(k) = obs.x.row(i);
      row /= sig;
      prec.noalias() += row * row.transpose();
      rhs.noalias() += row * ((obs.y_obs[i] - pi * e[i]) / sig);
    }
    (arm ? state.gamma1 : state.gamma0) = sample_mvn_from_precision(prec, rhs, rng);
  }
}

void step3_latent_coefs(ParameterState& state, const ObservedDataset& obs,
                        const BayesConfig& cfg, Rng& rng) {
  const Vector eps = outcome_residuals(state, obs);
  const Eigen::Index k = obs.k();
  const double prior_prec = 1.0 / cfg.prior_coef_var;

  Matrix prec = prior_prec * Matrix::Identity(k + 2, k + 2);
  Vector rhs = Vector::Zero(k + 2);
  Vector row(k + 2);
  for (Eigen::Index i = 0; i < obs.n(); ++i) {
    const int w = obs.w_obs[i];
    const double pi_z = w ? state.pi1e : state.pi0e;
    const double sig2_z = (w ? state.sig1e2 : state.sig0e2) + pi_z * pi_z;
    // regression of e on eps: slope pi_z/sig2_z, residual var 1 - pi_z^2/sig2_z
    const double pi_e = pi_z / sig2_z;
    const double sig_e = std::sqrt(std::max(1.0 - pi_z * pi_z / sig2_z, 1e-12));
    row[0] = 1.0;
    row[1] = static_cast<double>(obs.z[i]);
    row.tail(k) = obs.x.row(i);
    row /= sig_e;
    prec.noalias() += row * row.transpose();
    rhs.noalias() += row * ((state.latents[i] - pi_e * eps[i]) / sig_e);
  }

  // joint draw with the alpha coordinate (index 1) truncated positive:
  // accept-reject against the untruncated joint, then fall back to the exact
  // one-coordinate conditional if the positive region has tiny mass
  Eigen::LLT<Matrix> llt(prec);
  if (llt.info() != Eigen::Success)
    throw SingularCovariance("step3_latent_coefs: precision matrix is not positive definite");
  const Vector mean = llt.solve(rhs);
  Vector theta;
  bool accepted = false;
  for (int attempt = 0; attempt < 100; ++attempt) {
    Vector z(k + 2);
    for (Eigen::Index j = 0; j < k + 2; ++j) z[j] = sample_normal(rng);
    theta = mean + llt.matrixU().solve(z);
    if (theta[1] > 0.0) {
      accepted = true;
      break;
    }
  }
  if (!accepted) {
    // alpha | rest is normal with variance 1/prec(1,1) and mean shifted by the
    // cross-precision terms
    double shift = 0.0;
    for (Eigen::Index j = 0; j < k + 2; ++j)
      if (j != 1) shift += prec(1, j) * (theta[j] - mean[j]);
    const double cond_mean = mean[1] - shift / prec(1, 1);
    const double cond_sd = std::sqrt(1.0 / prec(1, 1));
    theta[1] = sample_truncnorm_above(cond_mean, cond_sd, 0.0, rng);
  }

  state.beta.resize(k + 1);
  state.beta[0] = theta[0];
  state.beta.tail(k) = theta.tail(k);
  state.alpha = theta[1];
}

void step4_latents(ParameterState& state, const ObservedDataset& obs, Rng& rng) {
  const Vector eps = outcome_residuals(state, obs);
  const Eigen::Index k = obs.k();
  for (Eigen::Index i = 0; i < obs.n(); ++i) {
    const int w = obs.w_obs[i];
    const double pi_z = w ? state.pi1e : state.pi0e;
    const double sig2_z = (w ? state.sig1e2 : state.sig0e2) + pi_z * pi_z;
    const double pi_e = pi_z / sig2_z;
    const double sig_e = std::sqrt(std::max(1.0 - pi_z * pi_z / sig2_z, 1e-12));
    const double m = state.beta[0] + state.alpha * obs.z[i] +
                     obs.x.row(i).dot(state.beta.tail(k)) + pi_e * eps[i];
    state.latents[i] = w ? sample_truncnorm_above(m, sig_e, 0.0, rng)
                         : sample_truncnorm_below(m, sig_e, 0.0, rng);
  }
}

IntVector impute_compliance(const ParameterState& state, const ObservedDataset& obs, Rng& rng) {
  const Vector eps = outcome_residuals(state, obs);
  IntVector out = IntVector::Zero(obs.n());
  for (Eigen::Index i = 0; i < obs.n(); ++i) {
    if (obs.w_obs[i] != obs.z[i]) continue;  // deterministically AT or NT
    const ImputationGeometry g = e_conditional(state, obs, i, eps[i]);
    const double phi_lo = normal_cdf((g.lo - g.mean) / g.sd);
    const double phi_hi = normal_cdf((g.hi - g.mean) / g.sd);
    double p;
    if (obs.z[i] == 0) {
      // complier vs never-taker: P(lo < e <= hi) / P(e <= hi)
      p = phi_hi > 0.0 ? (phi_hi - phi_lo) / phi_hi : 0.0;
    } else {
      // complier vs always-taker: P(lo < e <= hi) / P(e > lo)
      p = phi_lo < 1.0 ? (phi_hi - phi_lo) / (1.0 - phi_lo) : 0.0;
    }
    p = std::clamp(p, 0.0, 1.0);
    out[i] = rng.uniform() < p ? 1 : 0;
  }
  return out;
}

Vector impute_missing_outcomes(const ParameterState& state, const ObservedDataset& obs,
                               const IntVector& compliers) {
  const Vector eps = outcome_residuals(state, obs);
  const Eigen::Index k = obs.k();
  const double sd0 = std::sqrt(state.sig0e2);  // sqrt(sig_0^2 - pi_0^2)
  const double sd1 = std::sqrt(state.sig1e2);
  Vector y_mis = Vector::Zero(obs.n());
  for (Eigen::Index i = 0; i < obs.n(); ++i) {
    if (!compliers[i]) continue;
    const ImputationGeometry g = e_conditional(state, obs, i, eps[i]);
    const double e_mean = truncnorm_mean(g.mean, g.sd, g.lo, g.hi);
    if (obs.z[i] == 0) {
      const double eps1 = state.pi1e * e_mean + (sd1 / sd0) * (eps[i] - state.pi0e * e_mean);
      y_mis[i] = state.gamma1[0] + obs.x.row(i).dot(state.gamma1.tail(k)) + eps1;
    } else {
      const double eps0 = state.pi0e * e_mean + (sd0 / sd1) * (eps[i] - state.pi1e * e_mean);
      y_mis[i] = state.gamma0[0] + obs.x.row(i).dot(state.gamma0.tail(k)) + eps0;
    }
  }
  return y_mis;
}

double tau_draw(const ObservedDataset& obs, const IntVector& compliers, const Vector& y_mis) {
  double sum = 0.0;
  long count = 0;
  for (Eigen::Index i = 0; i < obs.n(); ++i) {
    if (!compliers[i]) continue;
    sum += (2.0 * obs.w_obs[i] - 1.0) * (obs.y_obs[i] - y_mis[i]);
    ++count;
  }
  if (count == 0) throw NoImputedCompliers("tau_draw: no complier was imputed");
  return sum / static_cast<double>(count);
}

PosteriorSummary run_posterior(const ObservedDataset& obs, const BayesConfig& cfg) {
  if (cfg.burn_in >= cfg.iters_per_chain)
    throw ValidationError("run_posterior: burn-in must be smaller than the chain length");

  std::vector<ChainResult> chains(cfg.chains);
  std::vector<std::thread> workers;
  workers.reserve(cfg.chains);
  for (int c = 0; c < cfg.chains; ++c) {
    const std::uint64_t seed = derive_seed({cfg.seed, static_cast<std::uint64_t>(c)});
    workers.emplace_back([&, c, seed] { chains[c] = run_chain(obs, cfg, seed); });
  }
  for (auto& t : workers) t.join();

  PosteriorSummary out;
  for (const auto& c : chains) {
    out.tau_draws.insert(out.tau_draws.end(), c.tau.begin(), c.tau.end());
    out.pco_draws.insert(out.pco_draws.end(), c.pco.begin(), c.pco.end());
    out.skipped_draws += c.skipped;
  }
  if (out.tau_draws.empty())
    throw NoImputedCompliers("run_posterior: every retained draw was skipped");

  double sum = 0.0;
  for (double v : out.tau_draws) sum += v;
  out.mean = sum / static_cast<double>(out.tau_draws.size());
  std::vector<double> sorted = out.tau_draws;
  std::sort(sorted.begin(), sorted.end());
  out.ci_lo = empirical_quantile_sorted(sorted, 0.025);
  out.ci_hi = empirical_quantile_sorted(sorted, 0.975);
  out.split_rhat = split_rhat(chains);
  return out;
}

}  // namespace cace
