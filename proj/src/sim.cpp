#include "cace/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "cace/dist.hpp"
#include "cace/regadj.hpp"
#include "cace/wald.hpp"

namespace cace {

namespace {

double rho_for_case(int error_case) {
  switch (error_case) {
    case 1:
    case 3:
      return 0.0;
    case 2:
    case 4:
      return 0.5;
    default:
      throw ValidationError("error_case must be 1, 2, 3 or 4");
  }
}

double median(std::vector<double> v) {
  if (v.empty()) throw EmptyInput("median of an empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct RepOutcome {
  bool removed = false;
  double point = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

}  // namespace

const char* method_name(SimMethod m) {
  switch (m) {
    case SimMethod::Wald:
      return "wald";
    case SimMethod::AdjEHW:
      return "adj-ehw";
    case SimMethod::AdjHC2:
      return "adj-hc2";
    case SimMethod::AdjHC3:
      return "adj-hc3";
    case SimMethod::Bayes:
      return "bayes";
  }
  return "?";
}

double delta0_value(double p_co, int dgp, int k) {
  const double phi = (dgp == 2) ? 0.4 : 0.0;
  return ((p_co - 0.5) / 0.35 + 1.0) * (1.0 - phi) * std::sqrt(static_cast<double>(k));
}

Kappas calibrate_kappas(int dgp, int k) {
  if (dgp != 1 && dgp != 2) throw ValidationError("dgp must be 1 or 2");
  const double phi = (dgp == 2) ? 0.4 : 0.0;
  const double kd = static_cast<double>(k);
  // Var(phi'x^2) = k phi^2 Var(x^2) = 2 k phi^2 for iid standard normal x
  const double quad = 2.0 * kd * phi * phi;
  Kappas out;
  out.k0 = 1.0 / std::sqrt(kd + quad);        // Y(0): xi'x + phi'x^2
  out.k1 = 1.0 / std::sqrt(4.0 * kd + quad);  // Y(1): (xi+eta)'x + phi'x^2
  out.k2 = 1.0 / std::sqrt(kd + quad);        // L(0): psi'x + phi'x^2
  return out;
}

ErrorDraws generate_errors(int n, int error_case, const Kappas& kappas, Rng& rng) {
  const double rho = rho_for_case(error_case);
  const bool mixture = error_case >= 3;
  ErrorDraws out;
  out.eps0.resize(n);
  out.eps1.resize(n);
  out.u.resize(n);

  // Unit-variance triples (s0, s1, su) with Corr(s0,s1)=0, Corr(s0,su)=
  // Corr(s1,su)=rho.  Mixture cases put 80% of each variance in the normal
  // part, which carries all the cross-covariances, plus an independent
  // centered exponential worth 20%.
  const double normal_var = mixture ? 0.8 : 1.0;
  const double load = rho / std::sqrt(normal_var);
  const double resid2 = normal_var - 2.0 * load * load;
  if (resid2 < 0.0) throw ValidationError("generate_errors: correlation target infeasible");
  const double resid = std::sqrt(resid2);
  const double expo_sd = mixture ? std::sqrt(0.2) : 0.0;

  for (int i = 0; i < n; ++i) {
    const double z0 = sample_normal(rng);
    const double z1 = sample_normal(rng);
    const double z2 = sample_normal(rng);
    double s0 = std::sqrt(normal_var) * z0;
    double s1 = std::sqrt(normal_var) * z1;
    double su = load * z0 + load * z1 + resid * z2;
    if (mixture) {
      s0 += expo_sd * (sample_exponential(rng) - 1.0);
      s1 += expo_sd * (sample_exponential(rng) - 1.0);
      su += expo_sd * (sample_exponential(rng) - 1.0);
    }
    out.eps0[i] = s0 / kappas.k0;
    out.eps1[i] = s1 / kappas.k1;
    out.u[i] = su / kappas.k2;
  }
  return out;
}

FinitePopulation generate_population(const DgpConfig& cfg) {
  if (cfg.n <= 0 || cfg.n % 2 != 0) throw ValidationError("population size must be even");
  if (!(cfg.p_co > 0.0 && cfg.p_co < 1.0))
    throw BadProbability("target complier fraction must lie in (0,1)");
  const double phi = (cfg.dgp == 2) ? 0.4 : 0.0;
  const Kappas kappas = calibrate_kappas(cfg.dgp, cfg.k);

  Rng rng(derive_seed({cfg.seed, 0x706f70756c617465ULL}));
  Matrix x(cfg.n, cfg.k);
  for (int i = 0; i < cfg.n; ++i)
    for (int j = 0; j < cfg.k; ++j) x(i, j) = sample_normal(rng);
  const ErrorDraws err = generate_errors(cfg.n, cfg.error_case, kappas, rng);

  const double delta0 = delta0_value(cfg.p_co, cfg.dgp, cfg.k);

  Vector lin = x.rowwise().sum();
  Vector quad = phi * x.array().square().matrix().rowwise().sum();
  Vector y0 = lin + quad + err.eps0;
  Vector y1 = 2.0 * lin + quad + err.eps1;  // xi'x + eta'x with xi = eta = 1
  // Latent scale for treatment uptake.  The sign of the whole index is
  // flipped relative to the outcome equations: with the positive orientation
  // the complier region {L(0) <= 0 < L(0)+delta1} can hold at most half the
  // units (delta0 >= 0), so targets like p_co = 0.85 would be unreachable.
  // Flipping keeps the stated delta0 magnitude, makes every target fraction
  // feasible, and stays within the probit-style model family.
  Vector l0 = -(delta0 * Vector::Ones(cfg.n) + lin + quad + err.u);

  // delta1 makes exactly m = round(p_co n) units compliers: those with
  // 0 <= -L(0) < delta1.  Put delta1 midway between the m-th and (m+1)-th
  // smallest candidate -L(0) values.
  std::vector<double> candidates;
  for (int i = 0; i < cfg.n; ++i)
    if (l0[i] <= 0.0) candidates.push_back(-l0[i]);
  const long m = std::lround(cfg.p_co * cfg.n);
  if (static_cast<long>(candidates.size()) < m)
    throw InfeasibleTarget("generate_population: too few units with L(0) <= 0 for the target");
  std::sort(candidates.begin(), candidates.end());
  double delta1;
  if (m == 0) {
    delta1 = candidates.empty() ? 0.5 : 0.5 * candidates.front();
  } else if (static_cast<std::size_t>(m) == candidates.size()) {
    delta1 = candidates.back() + 1.0;
  } else {
    delta1 = 0.5 * (candidates[m - 1] + candidates[m]);
  }

  FinitePopulation pop;
  pop.x = std::move(x);
  pop.y0 = std::move(y0);
  pop.y1 = std::move(y1);
  pop.w0.resize(cfg.n);
  pop.w1.resize(cfg.n);
  for (int i = 0; i < cfg.n; ++i) {
    pop.w0[i] = l0[i] > 0.0 ? 1 : 0;
    pop.w1[i] = (delta1 + l0[i]) > 0.0 ? 1 : 0;
  }
  validate(pop);
  return pop;
}

Metrics metrics(const std::vector<double>& estimates,
                const std::vector<std::pair<double, double>>& intervals, double truth) {
  if (estimates.empty() || intervals.size() != estimates.size())
    throw EmptyInput("metrics: empty or mismatched inputs");
  std::vector<double> abs_err, lengths;
  abs_err.reserve(estimates.size());
  lengths.reserve(intervals.size());
  long covered = 0;
  for (std::size_t r = 0; r < estimates.size(); ++r) {
    abs_err.push_back(std::fabs(estimates[r] - truth));
    lengths.push_back(intervals[r].second - intervals[r].first);
    if (intervals[r].first <= truth && truth <= intervals[r].second) ++covered;
  }
  Metrics out;
  out.mae = median(std::move(abs_err));
  out.crate = static_cast<double>(covered) / static_cast<double>(estimates.size());
  out.len = median(std::move(lengths));
  return out;
}

SimSettingResult run_setting(const DgpConfig& cfg, const DesignSpec& design,
                             const std::vector<SimMethod>& methods, int reps,
                             std::uint64_t seed, const SimOptions& options) {
  if (methods.empty()) throw ValidationError("run_setting: no methods selected");
  if (reps <= 0) throw ValidationError("run_setting: reps must be positive");

  const FinitePopulation pop = generate_population(cfg);
  const double truth = sample_cace(pop);
  const int n1 = design.n1 > 0 ? design.n1 : cfg.n / 2;

  QuantileCache cache;
  MixtureQuantileSpec lka_spec;
  lka_spec.draws = options.lka_draws;
  lka_spec.seed = options.lka_seed;

  // one slot per (method, replication) so merge order never matters
  std::vector<std::vector<RepOutcome>> slots(methods.size(),
                                             std::vector<RepOutcome>(reps));

  auto run_rep = [&](int r) {
    Rng rng(derive_seed({seed, static_cast<std::uint64_t>(r)}));
    Assignment a;
    if (design.kind == DesignKind::CRE) {
      a = sample_cre(cfg.n, n1, rng);
    } else {
      a = sample_rem(pop.x, n1, design, rng).first;
    }
    const ObservedDataset obs = reveal(pop, a);
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      RepOutcome& slot = slots[mi][r];
      try {
        EstimateReport rep;
        switch (methods[mi]) {
          case SimMethod::Wald:
            rep = design.kind == DesignKind::ReM
                      ? ci_wald_rem(obs, options.alpha, design.threshold_a, lka_spec, &cache)
                      : ci_wald_cre(obs, options.alpha);
            break;
          case SimMethod::AdjEHW:
            rep = ci_adj(obs, options.alpha, RobustVariant::EHW);
            break;
          case SimMethod::AdjHC2:
            rep = ci_adj(obs, options.alpha, RobustVariant::HC2);
            break;
          case SimMethod::AdjHC3:
            rep = ci_adj(obs, options.alpha, RobustVariant::HC3);
            break;
          case SimMethod::Bayes: {
            BayesConfig bc = options.bayes;
            bc.seed = derive_seed({seed, static_cast<std::uint64_t>(r), 0xba7e5ULL});
            const PosteriorSummary post = run_posterior(obs, bc);
            rep.point = post.mean;
            rep.ci_lo = post.ci_lo;
            rep.ci_hi = post.ci_hi;
            break;
          }
        }
        slot.point = rep.point;
        slot.lo = rep.ci_lo;
        slot.hi = rep.ci_hi;
      } catch (const NonpositiveIttW&) {
        slot.removed = true;
      }
    }
  };

  if (design.kind == DesignKind::ReM) {
    // warm the shared quantile sample arrays before the threads race for them
    MixtureQuantileSpec warm = lka_spec;
    warm.k = cfg.k;
    warm.a = design.threshold_a;
    cache.quantile(warm);
  }

  const int threads = std::max(options.threads, 1);
  if (threads == 1) {
    for (int r = 0; r < reps; ++r) run_rep(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) run_rep(r);
      });
    }
    for (auto& t : pool) t.join();
  }

  SimSettingResult out;
  out.truth = truth;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    std::vector<double> points;
    std::vector<std::pair<double, double>> intervals;
    long removed = 0;
    for (int r = 0; r < reps; ++r) {
      const RepOutcome& slot = slots[mi][r];
      if (slot.removed) {
        ++removed;
        continue;
      }
      points.push_back(slot.point);
      intervals.emplace_back(slot.lo, slot.hi);
    }
    MethodResult mr;
    mr.method = methods[mi];
    mr.removed = removed;
    mr.m = metrics(points, intervals, truth);
    out.methods.push_back(mr);
  }
  return out;
}

}  // namespace cace
