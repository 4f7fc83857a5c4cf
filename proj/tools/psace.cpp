// psace: command-line front end for the principal-stratification library.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "psace.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace psace;

namespace {

// ---------------------------------------------------------------------------
// JSON conversion

json num(double v) { return std::isfinite(v) ? json(v + 0.0) : json(nullptr); }

json strata_object(const StratumProbs& values, bool monotone) {
  json out = json::object();
  for (Stratum u : active_strata(monotone)) out[std::string(name(u))] = num(values[index(u)]);
  return out;
}

json params_json(const ParameterSet& p) {
  json out;
  out["monotone"] = p.monotone;
  out["p"] = p.p;
  out["alpha"] = p.alpha;
  json pi = json::array();
  for (const auto& row : p.pi) pi.push_back(strata_object(row, p.monotone));
  out["pi"] = pi;
  out["delta"] = {{"z1", strata_object(p.delta[1], p.monotone)}, {"z0", strata_object(p.delta[0], p.monotone)}};
  const PsaceSummary s = summarize_psace(p);
  out["ace"] = strata_object(s.ace_u, p.monotone);
  out["ace_s"] = s.ace_s_r;
  out["ace_y"] = s.ace_y_r;
  return out;
}

json summary_json(const PosteriorSummary& s) {
  json rows = json::array();
  for (const auto& r : s.rows) {
    json q = json::array();
    for (double v : r.quantiles) q.push_back(num(v));
    json row = {{"name", r.name}, {"mean", num(r.mean)}, {"quantiles", q}, {"psrf", num(r.psrf)}};
    if (r.is_effect) {
      row["excludes_zero"] = r.excludes_zero;
      row["modes"] = r.modes;
    }
    rows.push_back(row);
  }
  return {{"probs", s.probs}, {"rows", rows}};
}

std::string quantile_header(const std::vector<double>& probs) {
  std::ostringstream out;
  for (double q : probs) out << ",q" << q;
  return out.str();
}

std::string summary_csv(const PosteriorSummary& s) {
  std::ostringstream out;
  out.precision(17);
  out << "name,mean" << quantile_header(s.probs) << ",psrf\n";
  for (const auto& r : s.rows) {
    out << r.name << ',' << r.mean;
    for (double v : r.quantiles) out << ',' << v;
    out << ',' << r.psrf << '\n';
  }
  return out.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Options

struct Config {
  std::string input;
  std::string model = "nonmonotone";
  std::string method = "gibbs";
  std::size_t iterations = 20000;
  std::size_t burn_in = 4000;
  std::size_t thin = 1;
  std::size_t chains = 4;
  std::size_t starts = 20;
  double tolerance = 1e-8;
  std::size_t max_iter = 10000;
  std::vector<double> quantiles{0.025, 0.5, 0.975};
  std::optional<std::uint64_t> seed;
  std::string output;
  // bounds
  std::size_t bootstrap = 0;
  std::size_t trial = 0;  // 0 = every trial
  // check
  bool gof = false;
  bool identifiability = false;
  std::size_t ppp_reps = 0;
  std::string discrepancy = "realized";
  // sensitivity
  std::vector<double> sigma{0.05, 0.2, 0.5};
  // simulate
  std::string scenario = "monotone-3";
  std::size_t n_per_trial = 500;
  std::size_t replicates = 200;
  bool no_em = false;
  bool no_gibbs = false;
  // predict / evaluate
  std::optional<double> ace_s;
  std::optional<double> ace_ssbar;
  std::optional<double> ace_sbars;
  std::string prediction_case = "new_drug";
  double level = 0.95;

  bool monotone() const { return model == "monotone"; }
};

json config_json(const std::string& command, const Config& c, const CLI::App& sub) {
  json out = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string key = opt->get_lnames().front();
    if (key == "help" || key == "output") continue;
    const auto results = opt->results();
    if (opt->get_type_size() == 0) {
      out[key] = opt->count() > 0;
    } else if (opt->count() > 0) {
      out[key] = opt->get_expected_max() > 1 ? "[" + CLI::detail::join(results, ",") + "]" : results.back();
    } else {
      const std::string d = opt->get_default_str();
      out[key] = d.empty() ? json(nullptr) : json(d);
    }
  }
  out["command"] = command;
  out["model"] = c.model;
  return out;
}

std::uint64_t require_seed(const Config& c, const std::string& why) {
  if (!c.seed) throw Error(ErrorCode::config, "--seed is required for " + why);
  return *c.seed;
}

void check_sampler(const Config& c) {
  if (c.iterations <= c.burn_in) throw Error(ErrorCode::config, "--iterations must exceed --burnin");
  if (c.chains < 1 || c.thin < 1) throw Error(ErrorCode::config, "--chains and --thin must be at least 1");
}

GibbsOptions gibbs_options(const Config& c) {
  GibbsOptions g;
  g.monotone = c.monotone();
  g.iterations = c.iterations;
  g.burn_in = c.burn_in;
  g.thin = c.thin;
  g.chains = c.chains;
  g.seed = c.seed.value_or(0);
  return g;
}

EmOptions em_options(const Config& c) {
  EmOptions e;
  e.monotone = c.monotone();
  e.tolerance = c.tolerance;
  e.max_iter = c.max_iter;
  e.n_starts = c.starts;
  e.seed = c.seed.value_or(0);
  return e;
}

struct Output {
  json result = json::object();
  std::vector<std::string> warnings;
  std::vector<std::pair<std::string, std::string>> csv;  // file name, contents
};

ParsedCounts load(const Config& c, Output& out) {
  if (c.input.empty()) throw Error(ErrorCode::config, "--input is required");
  ParsedCounts parsed = read_counts_csv(c.input);
  out.warnings.insert(out.warnings.end(), parsed.warnings.begin(), parsed.warnings.end());
  return parsed;
}

void add_warnings(Output& out, const std::vector<std::string>& w) {
  out.warnings.insert(out.warnings.end(), w.begin(), w.end());
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_fit(const Config& c, const CLI::App& sub, Output& out) {
  const ParsedCounts data = load(c, out);
  const std::uint64_t seed = require_seed(c, "fit");
  (void)seed;
  if (c.method == "em") {
    for (const char* flag : {"--iterations", "--burnin", "--thin", "--chains", "--quantiles"})
      if (sub.count(flag) > 0)
        throw Error(ErrorCode::config, std::string(flag) + " applies to --method gibbs, not em");
    const EmResult fit = run_em(data.counts, em_options(c));
    add_warnings(out, fit.warnings);
    out.result["method"] = "em";
    out.result["params"] = params_json(fit.params);
    out.result["log_likelihood"] = num(fit.log_likelihood);
    out.result["iterations"] = fit.iterations;
    out.result["converged"] = fit.converged;
    out.result["best_start"] = fit.best_start;
    json starts = json::array();
    for (double v : fit.start_log_likelihoods) starts.push_back(num(v));
    out.result["start_log_likelihoods"] = starts;
    out.result["settings"] = {{"tolerance", c.tolerance}, {"max_iter", c.max_iter}, {"starts", c.starts},
                              {"start_rule", "barycenter plus uniform draws on the simplices"}};
    std::ostringstream csv;
    csv.precision(17);
    csv << "stratum,delta1,delta0,ace\n";
    for (Stratum u : active_strata(c.monotone()))
      csv << name(u) << ',' << fit.params.delta_of(1, u) << ',' << fit.params.delta_of(0, u) << ','
          << fit.params.ace(u) << '\n';
    out.csv.emplace_back("estimates.csv", csv.str());
  } else {
    if (sub.count("--starts") > 0 || sub.count("--tolerance") > 0 || sub.count("--max-iter") > 0)
      throw Error(ErrorCode::config, "--starts/--tolerance/--max-iter apply to --method em, not gibbs");
    check_sampler(c);
    const GibbsResult post = run_gibbs(data.counts, gibbs_options(c));
    add_warnings(out, post.warnings);
    const PosteriorSummary s = summarize(post.draws, c.quantiles);
    for (const auto& r : s.rows)
      if (r.is_effect && r.modes > 1)
        out.warnings.push_back(r.name + " posterior looks multimodal (" + std::to_string(r.modes) +
                               " modes by kernel heuristic); check identifiability");
    out.result["method"] = "gibbs";
    out.result["summary"] = summary_json(s);
    out.result["sampler"] = {{"iterations", c.iterations}, {"burn_in", c.burn_in}, {"thin", c.thin},
                             {"chains", c.chains}, {"draws", post.draws.total_draws()},
                             {"initialization", "prior draw"}, {"prior", "Dirichlet(1) / Beta(1,1)"},
                             {"mode_heuristic", "Gaussian kernel, bandwidth 0.25 sd, peaks >= 10% of max"}};
    out.csv.emplace_back("summary.csv", summary_csv(s));
  }
}

json bounds_json(const BoundsResult& b) {
  json strata = json::array();
  for (const auto& s : b.strata)
    strata.push_back({{"stratum", std::string(name(s.stratum))},
                      {"lower", num(s.lower)},
                      {"upper", num(s.upper)},
                      {"informative", s.informative},
                      {"ci_lower", num(s.ci_lower)},
                      {"ci_upper", num(s.ci_upper)}});
  return {{"trial", b.trial + 1}, {"strata", strata}, {"replicates", b.replicates}, {"skipped", b.skipped}};
}

void cmd_bounds(const Config& c, Output& out) {
  const ParsedCounts data = load(c, out);
  const ObservedDistribution dist = observed_distribution(data.counts);
  if (c.trial > data.counts.n_trials()) throw Error(ErrorCode::config, "--trial exceeds N_R");
  std::optional<std::uint64_t> seed;
  if (c.bootstrap > 0) seed = require_seed(c, "bounds --bootstrap");
  json trials = json::array();
  std::ostringstream csv;
  csv.precision(17);
  csv << "trial,stratum,lower,upper,informative,ci_lower,ci_upper\n";
  for (std::size_t r = 0; r < data.counts.n_trials(); ++r) {
    if (c.trial != 0 && r + 1 != c.trial) continue;
    const BoundsResult b = c.bootstrap > 0 ? bootstrap_bounds(data.counts, r, c.monotone(), c.bootstrap, *seed)
                                           : psace_bounds(dist, r, c.monotone());
    add_warnings(out, b.warnings);
    trials.push_back(bounds_json(b));
    for (const auto& s : b.strata)
      csv << r + 1 << ',' << name(s.stratum) << ',' << s.lower << ',' << s.upper << ',' << s.informative << ','
          << s.ci_lower << ',' << s.ci_upper << '\n';
  }
  out.result["trials"] = trials;
  out.result["bootstrap"] = {{"replicates", c.bootstrap},
                             {"scheme", "multinomial within each (z, trial) arm, arm sizes fixed"},
                             {"interval", "2.5% of lower bounds, 97.5% of upper bounds"}};
  out.csv.emplace_back("bounds.csv", csv.str());
}

void cmd_check(const Config& c, Output& out) {
  if (!c.gof && !c.identifiability) throw Error(ErrorCode::config, "check needs --gof and/or --identifiability");
  const ParsedCounts data = load(c, out);
  const std::size_t n = data.counts.n_trials();
  const std::uint64_t seed = require_seed(c, "check (EM starts)");
  (void)seed;
  if (c.gof) {
    json gof;
    const long df = degrees_of_freedom(n, c.monotone());
    gof["model"] = c.model;
    gof["df"] = df;
    if (df <= 0) {
      gof["testable"] = false;
      gof["reason"] = std::string(c.monotone() ? "monotone" : "nonmonotone") + " model with N_R = " +
                      std::to_string(n) + " has df = " + std::to_string(df) +
                      (c.monotone() ? "; at least 2 trials are needed" : "; at least 3 trials are needed");
    } else {
      const GofReport rep = lrt(data.counts, c.monotone(), em_options(c));
      add_warnings(out, rep.warnings);
      gof["testable"] = true;
      gof["statistic"] = num(rep.statistic);
      gof["p_value"] = num(rep.p_value);
      gof["model_log_likelihood"] = num(rep.model_log_likelihood);
      gof["saturated_log_likelihood"] = num(rep.saturated_log_likelihood);
    }
    if (c.ppp_reps > 0) {
      check_sampler(c);
      const GibbsResult post = run_gibbs(data.counts, gibbs_options(c));
      add_warnings(out, post.warnings);
      PppOptions po;
      po.n_rep = c.ppp_reps;
      po.seed = *c.seed;
      if (c.discrepancy == "refit")
        po.discrepancy = Discrepancy::refit;
      else if (c.discrepancy != "realized")
        throw Error(ErrorCode::config, "--discrepancy must be realized or refit");
      const PppResult ppp = posterior_predictive_p(data.counts, post.draws, po);
      add_warnings(out, ppp.warnings);
      gof["ppp"] = num(ppp.ppp);
      gof["n_rep"] = ppp.n_rep;
      gof["ppp_dropped"] = ppp.dropped;
      gof["discrepancy"] = c.discrepancy;
      gof["replicate_scheme"] = "full table regenerated from each draw at the observed total";
    }
    out.result["gof"] = gof;
  }
  if (c.identifiability) {
    json id;
    const std::size_t k = c.monotone() ? 4 * n + 5 : 5 * n + 7;
    id["n_params"] = k;
    id["n_free_frequencies"] = 8 * n - 1;
    id["necessary_condition"] = k <= 8 * n - 1;
    if (k > 8 * n - 1) {
      id["full_rank"] = false;
      id["reason"] = std::string("more parameters than free frequencies; the ") +
                     (c.monotone() ? "monotone model needs N_R >= 2" : "nonmonotone model needs N_R >= 3");
      add_warnings(out, {"model is not identified at N_R = " + std::to_string(n)});
    }
    const EmResult fit = run_em(data.counts, em_options(c));
    add_warnings(out, fit.warnings);
    const IdentifiabilityReport rep = local_identifiability(fit.params);
    id["evaluated_at"] = "EM estimate";
    id["jacobian_rank"] = rep.jacobian_rank;
    id["full_rank"] = rep.full_rank;
    json sv = json::array();
    for (double v : rep.singular_values) sv.push_back(num(v));
    id["singular_values"] = sv;
    json ratios = json::array();
    for (const auto& rv : rep.ratio_variation)
      ratios.push_back({{"trials", {rv.r1 + 1, rv.r2 + 1}}, {"ss_to_ssbar_varies", rv.a}, {"ssbar_to_sbarsbar_varies", rv.b}});
    id["ratio_variation"] = ratios;
    out.result["identifiability"] = id;
  }
}

void cmd_sensitivity(const Config& c, Output& out) {
  const ParsedCounts data = load(c, out);
  const std::uint64_t seed = require_seed(c, "sensitivity");
  check_sampler(c);
  if (c.monotone()) throw Error(ErrorCode::config, "the hierarchical model is nonmonotone only; drop --model monotone");
  json runs = json::array();
  std::ostringstream csv;
  csv.precision(17);
  csv << "sigma,name,mean" << quantile_header(c.quantiles) << "\n";
  for (double sigma : c.sigma) {
    HierarchicalOptions h;
    h.sigma = sigma;
    h.iterations = c.iterations;
    h.burn_in = c.burn_in;
    h.thin = c.thin;
    h.chains = c.chains;
    h.seed = seed;
    const HierarchicalResult res = run_hierarchical_gibbs(data.counts, h);
    add_warnings(out, res.warnings);
    const PosteriorSummary s = summarize_hierarchical(res.draws, c.quantiles);
    json acc = json::array();
    for (double a : res.acceptance) acc.push_back(num(a));
    runs.push_back({{"sigma", sigma},
                    {"summary", summary_json(s)},
                    {"mis_acceptance", acc},
                    {"min_acceptance", num(res.min_acceptance())},
                    {"pooled_scale", "expit(mu_1u) - expit(mu_0u)"}});
    for (const auto& r : s.rows) {
      csv << sigma << ',' << r.name << ',' << r.mean;
      for (double v : r.quantiles) csv << ',' << v;
      csv << '\n';
    }
  }
  out.result["runs"] = runs;
  out.result["prior"] = "p ~ Dirichlet(1), alpha_r ~ U(0,1), pi_r ~ Dirichlet(1), mu_zu ~ U(-5,5)";
  out.csv.emplace_back("sensitivity.csv", csv.str());
}

void cmd_simulate(const Config& c, Output& out) {
  const std::uint64_t seed = require_seed(c, "simulate");
  if (!c.no_gibbs) check_sampler(c);
  const Scenario scenario = find_scenario(c.scenario, c.n_per_trial);
  EvalConfig ec;
  ec.run_em = !c.no_em;
  ec.run_gibbs = !c.no_gibbs;
  ec.em = em_options(c);
  ec.gibbs = gibbs_options(c);
  const EvalReport rep = evaluate(scenario, c.replicates, ec, seed);
  add_warnings(out, rep.warnings);
  json strata = json::array();
  for (const auto& s : rep.strata)
    strata.push_back({{"stratum", std::string(name(s.stratum))},
                      {"truth", num(s.truth)},
                      {"bias", num(s.bias)},
                      {"rmse", num(s.rmse)},
                      {"posterior_bias", num(s.posterior_bias)},
                      {"coverage", num(s.coverage)},
                      {"mean_width", num(s.mean_width)},
                      {"max_psrf", num(s.max_psrf)}});
  out.result["scenario"] = rep.scenario;
  out.result["replicates"] = rep.replicates;
  out.result["failures"] = rep.failures;
  out.result["strata"] = strata;
  std::ostringstream csv;
  csv.precision(17);
  csv << "replicate,stratum,mle,median,lower,upper,covered,psrf,failed\n";
  for (const auto& r : rep.records)
    for (Stratum u : active_strata(scenario.monotone())) {
      const std::size_t k = index(u);
      csv << r.replicate + 1 << ',' << name(u) << ',' << r.mle[k] << ',' << r.median[k] << ',' << r.lower[k] << ','
          << r.upper[k] << ',' << r.covered[k] << ',' << r.psrf[k] << ',' << r.failed << '\n';
    }
  out.csv.emplace_back("replicates.csv", csv.str());
}

json verdict_json(const SurrogateVerdict& v) {
  json iv = json::array();
  for (const auto& i : v.intervals)
    iv.push_back({{"stratum", std::string(name(i.stratum))},
                  {"lower", num(i.lower)},
                  {"median", num(i.median)},
                  {"upper", num(i.upper)},
                  {"contains_zero", i.contains_zero}});
  json out = {{"level", v.level}, {"intervals", iv}};
  out["necessity"] = {{"SS", v.necessity(Stratum::SS)}, {"SbarSbar", v.necessity(Stratum::SbarSbar)}};
  json suff = {{"SSbar", v.sufficiency(Stratum::SSbar)}};
  if (!v.monotone) suff["SbarS"] = v.sufficiency(Stratum::SbarS);
  out["sufficiency"] = suff;
  out["sum_condition"] = v.sum_condition ? num(*v.sum_condition) : json(nullptr);
  return out;
}

void cmd_evaluate(const Config& c, Output& out) {
  const ParsedCounts data = load(c, out);
  require_seed(c, "evaluate");
  check_sampler(c);
  const GibbsResult post = run_gibbs(data.counts, gibbs_options(c));
  add_warnings(out, post.warnings);
  const SurrogateVerdict v = evaluate_surrogate(post.draws, c.level);
  out.result["verdict"] = verdict_json(v);
  out.result["summary"] = summary_json(summarize(post.draws, c.quantiles));
}

void cmd_predict(const Config& c, Output& out) {
  if (!c.ace_s) throw Error(ErrorCode::config, "--ace-s is required");
  if (c.prediction_case != "same_drug" && c.prediction_case != "new_drug")
    throw Error(ErrorCode::config, "--case must be same_drug or new_drug");
  out.result["case"] = c.prediction_case;
  out.result["ace_s"] = *c.ace_s;
  const double s = *c.ace_s;
  if (c.input.empty()) {
    if (!c.ace_ssbar) throw Error(ErrorCode::config, "--ace-ssbar is required without --input");
    if (c.monotone()) {
      out.result["ace_y"] = predict_ace_y_monotone(s, *c.ace_ssbar);
    } else {
      if (!c.ace_sbars) throw Error(ErrorCode::config, "--ace-sbars is required for the nonmonotone model");
      const Interval iv = predict_ace_y_bounds(s, *c.ace_ssbar, *c.ace_sbars);
      out.result["ace_y_bounds"] = {iv.lower, iv.upper};
    }
    const Sign sign = s > 0.0 ? Sign::positive : (s == 0.0 ? Sign::zero : Sign::negative);
    out.result["sign"] = std::string(to_string(sign_conclusion(sign, *c.ace_ssbar, c.ace_sbars.value_or(0.0), c.monotone())));
    return;
  }
  const ParsedCounts data = load(c, out);
  require_seed(c, "predict with --input");
  check_sampler(c);
  const GibbsResult post = run_gibbs(data.counts, gibbs_options(c));
  add_warnings(out, post.warnings);
  const SurrogateVerdict v = evaluate_surrogate(post.draws, c.level);
  out.result["verdict"] = verdict_json(v);
  const Sign sign = s > 0.0 ? Sign::positive : (s == 0.0 ? Sign::zero : Sign::negative);
  const SignPosterior sp = sign_posterior(post.draws, sign);
  out.result["sign_posterior"] = {{"positive", sp.positive}, {"zero", sp.zero}, {"indeterminate", sp.indeterminate}};
  const double tail = 0.5 * (1.0 - c.level);
  if (c.monotone()) {
    std::vector<double> pred;
    for (const auto& chain : post.draws.trace([s](const ParameterSet& p) { return predict_ace_y_monotone(s, p.ace(Stratum::SSbar)); }))
      pred.insert(pred.end(), chain.begin(), chain.end());
    out.result["ace_y"] = {{"lower", quantile(pred, tail)}, {"median", quantile(pred, 0.5)}, {"upper", quantile(pred, 1.0 - tail)}};
  } else {
    std::vector<double> lo, hi;
    for (std::size_t ch = 0; ch < post.draws.n_chains(); ++ch)
      for (std::size_t i = 0; i < post.draws.draws_per_chain(ch); ++i) {
        const ParameterSet p = post.draws.draw(ch, i);
        const Interval iv = predict_ace_y_bounds(s, p.ace(Stratum::SSbar), p.ace(Stratum::SbarS));
        lo.push_back(iv.lower);
        hi.push_back(iv.upper);
      }
    out.result["ace_y_bounds"] = {{"lower_median", quantile(lo, 0.5)}, {"upper_median", quantile(hi, 0.5)},
                                  {"lower_quantile", quantile(lo, tail)}, {"upper_quantile", quantile(hi, 1.0 - tail)}};
  }
}

void cmd_tabulate(const Config& c, std::ostream& os) {
  if (c.input.empty()) throw Error(ErrorCode::config, "--input is required");
  std::ifstream in(c.input, std::ios::binary);
  if (!in) throw Error(ErrorCode::parse, "cannot open '" + c.input + "'");
  const ParsedCounts parsed = tabulate_units_csv(in, c.input);
  for (const auto& w : parsed.warnings) std::cerr << "warning: " << w << '\n';
  write_counts_csv(os, parsed.counts);
}

void emit(const std::string& command, const Config& c, const CLI::App& sub, const Output& out) {
  json doc;
  doc["tool"] = "psace";
  doc["version"] = std::string(kVersion);
  doc["command"] = command;
  doc["config"] = config_json(command, c, sub);
  doc["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  doc["timestamp"] = utc_timestamp();
  doc["warnings"] = out.warnings;
  doc["result"] = out.result;
  const std::string text = doc.dump(2) + "\n";
  if (c.output.empty()) {
    std::cout << text;
    return;
  }
  fs::create_directories(c.output);
  std::ofstream(fs::path(c.output) / "result.json", std::ios::binary) << text;
  for (const auto& [file, contents] : out.csv) std::ofstream(fs::path(c.output) / file, std::ios::binary) << contents;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Principal-stratification surrogate evaluation across multiple trials"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Config c;

  auto common_input = [&](CLI::App* s) {
    s->add_option("--input,-i", c.input, "Counts CSV (trial,z,s,y,count)")->check(CLI::ExistingFile);
  };
  auto model_flag = [&](CLI::App* s) {
    s->add_option("--model", c.model, "monotone or nonmonotone")
        ->check(CLI::IsMember({"monotone", "nonmonotone"}))
        ->capture_default_str();
  };
  auto seed_flag = [&](CLI::App* s) { s->add_option("--seed", c.seed, "Master seed (u64)"); };
  auto output_flag = [&](CLI::App* s) {
    s->add_option("--output,-o", c.output, "Directory for result.json and CSV mirrors (default: JSON to stdout)");
  };
  auto sampler_flags = [&](CLI::App* s) {
    s->add_option("--iterations", c.iterations, "Gibbs iterations including burn-in")->capture_default_str();
    s->add_option("--burnin", c.burn_in, "Burn-in iterations")->capture_default_str();
    s->add_option("--thin", c.thin, "Keep every k-th draw")->capture_default_str();
    s->add_option("--chains", c.chains, "Independent chains")->capture_default_str();
    s->add_option("--quantiles", c.quantiles, "Reported posterior quantiles")->capture_default_str()->delimiter(',');
  };
  auto em_flags = [&](CLI::App* s) {
    s->add_option("--starts", c.starts, "Random EM starts besides the barycenter")->capture_default_str();
    s->add_option("--tolerance", c.tolerance, "EM log-likelihood increment tolerance")->capture_default_str();
    s->add_option("--max-iter", c.max_iter, "EM iteration cap")->capture_default_str();
  };

  CLI::App* fit = app.add_subcommand("fit", "Fit the model by EM or Gibbs sampling");
  common_input(fit);
  model_flag(fit);
  fit->add_option("--method", c.method, "em or gibbs")->check(CLI::IsMember({"em", "gibbs"}))->capture_default_str();
  sampler_flags(fit);
  em_flags(fit);
  seed_flag(fit);
  output_flag(fit);

  CLI::App* bounds = app.add_subcommand("bounds", "Large-sample bounds per trial");
  common_input(bounds);
  model_flag(bounds);
  bounds->add_option("--bootstrap", c.bootstrap, "Bootstrap replicates (0: none)")->capture_default_str();
  bounds->add_option("--trial", c.trial, "Only this trial (1-based)");
  seed_flag(bounds);
  output_flag(bounds);

  CLI::App* check = app.add_subcommand("check", "Goodness of fit and identifiability");
  common_input(check);
  model_flag(check);
  check->add_flag("--gof", c.gof, "Likelihood-ratio test (and ppp with --ppp-reps)");
  check->add_flag("--identifiability", c.identifiability, "Jacobian rank at the EM estimate");
  check->add_option("--ppp-reps", c.ppp_reps, "Posterior predictive replicates (0: skip)")->capture_default_str();
  check->add_option("--discrepancy", c.discrepancy, "realized or refit")->capture_default_str();
  sampler_flags(check);
  em_flags(check);
  seed_flag(check);
  output_flag(check);

  CLI::App* sens = app.add_subcommand("sensitivity", "Hierarchical model without homogeneity");
  common_input(sens);
  model_flag(sens);
  sens->add_option("--sigma", c.sigma, "Spread(s) of logit delta across trials")->delimiter(',')->capture_default_str();
  sampler_flags(sens);
  seed_flag(sens);
  output_flag(sens);

  CLI::App* sim = app.add_subcommand("simulate", "Simulation study on a built-in scenario");
  sim->add_option("--scenario", c.scenario, "Scenario name")->capture_default_str();
  sim->add_option("--n-per-trial", c.n_per_trial, "Units per trial")->capture_default_str();
  sim->add_option("--replicates", c.replicates, "Replicates")->capture_default_str();
  sim->add_flag("--no-em", c.no_em, "Skip EM");
  sim->add_flag("--no-gibbs", c.no_gibbs, "Skip Gibbs");
  sampler_flags(sim);
  em_flags(sim);
  seed_flag(sim);
  output_flag(sim);

  CLI::App* pred = app.add_subcommand("predict", "Predict ACE^Y in a new trial");
  common_input(pred);
  model_flag(pred);
  pred->add_option("--ace-s", c.ace_s, "Effect on the surrogate in the new trial");
  pred->add_option("--ace-ssbar", c.ace_ssbar, "ACE_SSbar (without --input)");
  pred->add_option("--ace-sbars", c.ace_sbars, "ACE_SbarS (without --input)");
  pred->add_option("--case", c.prediction_case, "same_drug or new_drug")->capture_default_str();
  pred->add_option("--level", c.level, "Credible level")->capture_default_str();
  sampler_flags(pred);
  seed_flag(pred);
  output_flag(pred);

  CLI::App* eval = app.add_subcommand("evaluate", "Causal necessity and sufficiency of the surrogate");
  common_input(eval);
  model_flag(eval);
  eval->add_option("--level", c.level, "Credible level")->capture_default_str();
  sampler_flags(eval);
  seed_flag(eval);
  output_flag(eval);

  CLI::App* tab = app.add_subcommand("tabulate", "Unit-level CSV (trial,z,s,y) to counts CSV");
  tab->add_option("--input,-i", c.input, "Unit-level CSV (trial,z,s,y)")->check(CLI::ExistingFile)->required();
  tab->add_option("--output,-o", c.output, "Counts CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    if (command == "tabulate") {
      if (c.output.empty()) {
        cmd_tabulate(c, std::cout);
      } else {
        std::ofstream os(c.output, std::ios::binary);
        if (!os) throw Error(ErrorCode::config, "cannot write '" + c.output + "'");
        cmd_tabulate(c, os);
      }
      return 0;
    }
    Output out;
    if (command == "fit") cmd_fit(c, *sub, out);
    else if (command == "bounds") cmd_bounds(c, out);
    else if (command == "check") cmd_check(c, out);
    else if (command == "sensitivity") cmd_sensitivity(c, out);
    else if (command == "simulate") cmd_simulate(c, out);
    else if (command == "predict") cmd_predict(c, out);
    else if (command == "evaluate") cmd_evaluate(c, out);
    emit(command, c, *sub, out);
    return 0;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return e.is_input_error() ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error [numerical]: " << e.what() << '\n';
    return 3;
  }
}
