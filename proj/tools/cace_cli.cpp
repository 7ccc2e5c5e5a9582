// command-line front end: analyze / simulate / design / lquantile
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cace/bayes.hpp"
#include "cace/csv.hpp"
#include "cace/design.hpp"
#include "cace/dist.hpp"
#include "cace/lka.hpp"
#include "cace/regadj.hpp"
#include "cace/sim.hpp"
#include "cace/wald.hpp"
#include "json.hpp"

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw cace::IoError("cannot open '" + out_path + "' for writing");
  out << text;
}

int default_threads() {
  if (const char* env = std::getenv("CACE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

cace::SimMethod parse_method(const std::string& name) {
  if (name == "wald") return cace::SimMethod::Wald;
  if (name == "adj-ehw") return cace::SimMethod::AdjEHW;
  if (name == "adj-hc2") return cace::SimMethod::AdjHC2;
  if (name == "adj-hc3") return cace::SimMethod::AdjHC3;
  if (name == "bayes") return cace::SimMethod::Bayes;
  throw cace::ValidationError("unknown method '" + name + "'");
}

struct AnalyzeArgs {
  std::string data;
  std::string z = "Z", w = "W", y = "Y";
  std::vector<std::string> x;
  std::string method = "wald";
  double alpha = 0.05;
  std::string design = "cre";
  double pa = 0.01;
  long draws = 1'000'000;
  std::uint64_t seed = 0;
  int chains = 4, iters = 2500, burnin = 1250;
  std::string out;
  std::string config;  // optional key=value file supplying column roles
};

std::map<std::string, std::string> read_kv_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cace::IoError("cannot open config '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string trimmed = line;
    trimmed.erase(0, trimmed.find_first_not_of(" \t"));
    if (trimmed.empty() || trimmed[0] == '#') continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw cace::ParseError(path + ":" + std::to_string(line_no) + ": expected key=value");
    std::string key = trimmed.substr(0, eq);
    std::string value = trimmed.substr(eq + 1);
    key.erase(key.find_last_not_of(" \t") + 1);
    value.erase(0, value.find_first_not_of(" \t"));
    value.erase(value.find_last_not_of(" \t") + 1);
    kv[key] = value;
  }
  return kv;
}

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

json report_of(const cace::EstimateReport& rep) {
  json doc;
  doc["method"] = rep.method;
  doc["point"] = rep.point;
  doc["ci_lo"] = rep.ci_lo;
  doc["ci_hi"] = rep.ci_hi;
  doc["alpha"] = rep.alpha;
  if (rep.wald) {
    doc["itt_w"] = rep.wald->itt_w;
    doc["itt_y"] = rep.wald->itt_y;
    doc["var_tilde"] = rep.wald->var_tilde;
    doc["var_tilde_x"] = rep.wald->var_tilde_x;
    doc["r2_hat"] = rep.wald->r2_hat;
  }
  if (rep.adj) {
    doc["itt_w_adj"] = rep.adj->itt_w_adj;
    doc["itt_y_adj"] = rep.adj->itt_y_adj;
    doc["v_ehw"] = rep.adj->v_ehw;
    doc["v_hc2"] = rep.adj->v_hc2;
    doc["v_hc3"] = rep.adj->v_hc3;
  }
  return doc;
}

int run_analyze(const AnalyzeArgs& args) {
  const auto started = std::chrono::steady_clock::now();

  AnalyzeArgs a = args;
  if (!args.config.empty()) {
    const auto kv = read_kv_config(args.config);
    const auto get = [&](const char* key, std::string& slot) {
      auto it = kv.find(key);
      if (it != kv.end()) slot = it->second;
    };
    get("z", a.z);
    get("w", a.w);
    get("y", a.y);
    auto it = kv.find("x");
    if (it != kv.end()) a.x = split_csv_list(it->second);
  }

  cace::ColumnRoles roles;
  roles.treatment_assigned = a.z;
  roles.treatment_received = a.w;
  roles.outcome = a.y;
  roles.covariates = a.x;
  const cace::IngestResult ingest = cace::ingest_csv(a.data, roles);
  const cace::ObservedDataset& obs = ingest.data;

  json doc;
  doc["version"] = kVersion;
  json req;
  req["data"] = a.data;
  req["method"] = a.method;
  req["alpha"] = a.alpha;
  req["design"] = a.design;
  if (a.design == "rem") req["pa"] = a.pa;
  req["columns"] = {{"z", a.z}, {"w", a.w}, {"y", a.y}, {"x", a.x}};
  req["seed"] = a.seed;
  doc["request"] = req;
  doc["covariates"] = ingest.covariate_names;
  doc["n"] = obs.n();
  long n1 = 0;
  for (Eigen::Index i = 0; i < obs.n(); ++i) n1 += obs.z[i];
  doc["n1"] = n1;
  doc["n0"] = obs.n() - n1;

  if (a.method == "bayes") {
    cace::BayesConfig cfg;
    cfg.chains = a.chains;
    cfg.iters_per_chain = a.iters;
    cfg.burn_in = a.burnin;
    cfg.seed = a.seed;
    const cace::PosteriorSummary post = cace::run_posterior(obs, cfg);
    double pco = 0.0;
    for (double v : post.pco_draws) pco += v;
    pco /= static_cast<double>(post.pco_draws.size());
    json b;
    b["point"] = post.mean;
    b["ci_lo"] = post.ci_lo;
    b["ci_hi"] = post.ci_hi;
    b["pco_mean"] = pco;
    b["draws"] = post.tau_draws.size();
    b["skipped_draws"] = post.skipped_draws;
    if (std::isfinite(post.split_rhat)) b["split_rhat"] = post.split_rhat;
    doc["posterior"] = b;
  } else if (a.method == "wald") {
    if (a.design == "rem") {
      const double threshold =
          cace::threshold_from_pa(static_cast<int>(obs.k()), a.pa);
      cace::MixtureQuantileSpec spec;
      spec.draws = a.draws;
      spec.seed = a.seed;
      doc["estimate"] =
          report_of(cace::ci_wald_rem(obs, a.alpha, threshold, spec));
    } else {
      doc["estimate"] = report_of(cace::ci_wald_cre(obs, a.alpha));
    }
  } else {
    cace::RobustVariant variant;
    if (a.method == "adj-ehw") {
      variant = cace::RobustVariant::EHW;
    } else if (a.method == "adj-hc2") {
      variant = cace::RobustVariant::HC2;
    } else if (a.method == "adj-hc3") {
      variant = cace::RobustVariant::HC3;
    } else {
      throw cace::ValidationError("unknown method '" + a.method + "'");
    }
    doc["estimate"] = report_of(cace::ci_adj(obs, a.alpha, variant));
  }

  write_output(doc.dump(2) + "\n", a.out);
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);
  std::cerr << "analyze finished in " << elapsed.count() << " ms\n";
  return 0;
}

int run_simulate(const std::string& config_path, int threads_flag,
                 const std::string& out_flag) {
  const auto started = std::chrono::steady_clock::now();
  const auto kv = read_kv_config(config_path);
  const auto want = [&](const char* key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end())
      throw cace::ParseError(config_path + ": missing key '" + std::string(key) + "'");
    return it->second;
  };
  const auto get_or = [&](const char* key, const std::string& fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
  };

  cace::DgpConfig cfg;
  cfg.dgp = std::stoi(want("dgp"));
  cfg.n = std::stoi(want("n"));
  cfg.k = std::stoi(want("k"));
  cfg.p_co = std::stod(want("p_co"));
  cfg.error_case = std::stoi(want("error_case"));
  cfg.seed = std::stoull(get_or("seed", "0"));

  const std::string design_name = want("design");
  cace::DesignSpec design;
  design.n = cfg.n;
  design.n1 = cfg.n / 2;
  if (design_name == "rem") {
    design.kind = cace::DesignKind::ReM;
    design.threshold_a =
        cace::threshold_from_pa(cfg.k, std::stod(get_or("pa", "0.01")));
  } else if (design_name != "cre") {
    throw cace::ValidationError("design must be 'cre' or 'rem'");
  }

  const int reps = std::stoi(want("reps"));
  std::vector<cace::SimMethod> methods;
  for (const auto& name : split_csv_list(want("methods")))
    methods.push_back(parse_method(name));

  cace::SimOptions options;
  options.threads = threads_flag > 0 ? threads_flag
                                     : std::stoi(get_or("threads", std::to_string(default_threads())));
  options.alpha = std::stod(get_or("alpha", "0.05"));
  options.bayes.chains = std::stoi(get_or("chains", "2"));
  options.bayes.iters_per_chain = std::stoi(get_or("iters", "1000"));
  options.bayes.burn_in = std::stoi(get_or("burnin", "500"));
  options.lka_draws = std::stol(get_or("lka_draws", "1000000"));

  const cace::SimSettingResult result =
      cace::run_setting(cfg, design, methods, reps, cfg.seed, options);

  std::ostringstream setting;
  setting << "dgp" << cfg.dgp << "-n" << cfg.n << "-k" << cfg.k << "-pco"
          << want("p_co") << "-case" << cfg.error_case << "-" << design_name;

  std::ostringstream csv;
  csv << "setting,method,mae,crate,len,removed\n";
  for (const auto& mr : result.methods) {
    csv << setting.str() << "," << cace::method_name(mr.method) << ","
        << fmt17(mr.m.mae) << "," << fmt17(mr.m.crate) << "," << fmt17(mr.m.len)
        << "," << mr.removed << "\n";
  }
  write_output(csv.str(), out_flag.empty() ? get_or("out", "") : out_flag);
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);
  std::cerr << "simulate finished in " << elapsed.count() << " ms (truth "
            << fmt17(result.truth) << ")\n";
  return 0;
}

int run_design(const std::string& x_path, int n1, double pa, std::uint64_t seed,
               const std::string& out_z) {
  const cace::Matrix x = cace::read_covariate_matrix(x_path);
  cace::DesignSpec spec;
  spec.kind = cace::DesignKind::ReM;
  spec.n = static_cast<int>(x.rows());
  spec.n1 = n1;
  spec.threshold_a = cace::threshold_from_pa(static_cast<int>(x.cols()), pa);
  cace::Rng rng(cace::derive_seed({seed, 0xde5169ULL}));
  const auto [assignment, report] = cace::sample_rem(x, n1, spec, rng);

  std::ostringstream z_csv;
  z_csv << "Z\n";
  for (Eigen::Index i = 0; i < assignment.z.size(); ++i) z_csv << assignment.z[i] << "\n";
  if (!out_z.empty()) {
    write_output(z_csv.str(), out_z);
  }

  json doc;
  doc["version"] = kVersion;
  doc["n"] = spec.n;
  doc["n1"] = n1;
  doc["pa"] = pa;
  doc["threshold_a"] = spec.threshold_a;
  doc["m"] = report.m;
  doc["tries"] = report.tries;
  doc["accepted"] = report.accepted;
  json diff = json::array();
  for (Eigen::Index j = 0; j < report.mean_diff.size(); ++j) diff.push_back(report.mean_diff[j]);
  doc["mean_diff"] = diff;
  doc["seed"] = seed;
  if (out_z.empty()) {
    doc["z"] = json::array();
    for (Eigen::Index i = 0; i < assignment.z.size(); ++i) doc["z"].push_back(assignment.z[i]);
  }
  std::cout << doc.dump(2) << "\n";
  return 0;
}

int run_lquantile(int k, double pa, std::optional<double> a_flag, double r2, double p,
                  long draws, std::uint64_t seed) {
  cace::MixtureQuantileSpec spec;
  spec.k = k;
  spec.a = a_flag ? *a_flag : cace::threshold_from_pa(k, pa);
  spec.r2 = r2;
  spec.p = p;
  spec.draws = draws;
  spec.seed = seed;
  json doc;
  doc["version"] = kVersion;
  doc["k"] = k;
  doc["a"] = spec.a;
  doc["r2"] = r2;
  doc["p"] = p;
  doc["draws"] = draws;
  doc["seed"] = seed;
  doc["lambda"] = cace::mixture_quantile(spec);
  std::cout << doc.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sample complier average causal effect estimation"};
  app.require_subcommand(1);

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze", "Estimate the sample CACE from a CSV dataset");
  analyze->add_option("--data", aa.data, "CSV file with header row")->required();
  analyze->add_option("--z", aa.z, "treatment-assigned column (0/1)");
  analyze->add_option("--w", aa.w, "treatment-received column (0/1)");
  analyze->add_option("--y", aa.y, "outcome column");
  analyze->add_option("--x", aa.x,
                      "covariate columns; non-numeric columns expand to indicators "
                      "with the lexicographically first level dropped");
  analyze->add_option("--config", aa.config, "key=value file supplying z/w/y/x roles");
  analyze->add_option("--method", aa.method, "wald | adj-ehw | adj-hc2 | adj-hc3 | bayes");
  analyze->add_option("--alpha", aa.alpha, "two-sided miscoverage level");
  analyze->add_option("--design", aa.design, "cre | rem (rem uses the shrunken Wald interval)");
  analyze->add_option("--pa", aa.pa, "rerandomization acceptance probability");
  analyze->add_option("--draws", aa.draws, "Monte Carlo draws for the reference quantile");
  analyze->add_option("--seed", aa.seed, "RNG seed");
  analyze->add_option("--chains", aa.chains, "Bayes: number of chains");
  analyze->add_option("--iters", aa.iters, "Bayes: draws per chain");
  analyze->add_option("--burnin", aa.burnin, "Bayes: discarded draws per chain");
  analyze->add_option("--out", aa.out, "write the JSON report here instead of stdout");

  std::string sim_config, sim_out;
  int sim_threads = 0;
  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo study setting");
  simulate->add_option("--config", sim_config, "key=value file: dgp,n,k,p_co,error_case,design,pa,reps,methods,seed,out")
      ->required();
  simulate->add_option("--threads", sim_threads, "worker threads (default $CACE_THREADS or 1)");
  simulate->add_option("--out", sim_out, "override the config's output path");

  std::string design_x, design_out_z;
  int design_n1 = 0;
  double design_pa = 0.01;
  std::uint64_t design_seed = 0;
  auto* design = app.add_subcommand("design", "Draw a rerandomized assignment for a covariate file");
  design->add_option("--x", design_x, "CSV of numeric covariates (all columns used)")->required();
  design->add_option("--n1", design_n1, "treated-arm size")->required();
  design->add_option("--pa", design_pa, "acceptance probability for the M threshold");
  design->add_option("--seed", design_seed, "RNG seed");
  design->add_option("--out-z", design_out_z, "write the assignment column here");

  int lq_k = 1;
  double lq_pa = 0.01, lq_r2 = 0.0, lq_p = 0.975;
  long lq_draws = 1'000'000;
  std::uint64_t lq_seed = 0;
  std::optional<double> lq_a;
  auto* lquantile = app.add_subcommand("lquantile", "Quantile of the rerandomization reference distribution");
  lquantile->add_option("--k", lq_k, "number of covariates")->required();
  lquantile->add_option("--pa", lq_pa, "acceptance probability defining the threshold");
  lquantile->add_option("--a", lq_a, "threshold value (overrides --pa; inf allowed)");
  lquantile->add_option("--r2", lq_r2, "squared correlation captured by covariates");
  lquantile->add_option("--p", lq_p, "quantile level");
  lquantile->add_option("--draws", lq_draws, "Monte Carlo draws");
  lquantile->add_option("--seed", lq_seed, "RNG seed");

  try {
    app.parse(argc, argv);
    if (analyze->parsed()) return run_analyze(aa);
    if (simulate->parsed()) return run_simulate(sim_config, sim_threads, sim_out);
    if (design->parsed())
      return run_design(design_x, design_n1, design_pa, design_seed, design_out_z);
    if (lquantile->parsed())
      return run_lquantile(lq_k, lq_pa, lq_a, lq_r2, lq_p, lq_draws, lq_seed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const cace::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const cace::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const cace::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
