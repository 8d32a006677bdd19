// Command-line front end: scenario runs, reward design, prevalence bounds,
// survey studies and parameter sweeps, all driven by JSON configs.
//
// Exit codes: 0 success, 2 configuration problem, 3 numerical failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "epg/scenario.hpp"

namespace {

using epg::json;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw epg::config_error("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw epg::config_error("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream os(out_path);
  if (!os) throw epg::config_error("cannot write " + out_path);
  os << j.dump(2) << '\n';
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<double> horizon;

  void apply(epg::ScenarioConfig& cfg) const {
    if (seed) cfg.seed = *seed;
    if (dt) {
      if (!(*dt > 0.0)) throw epg::config_error("--dt must be positive");
      cfg.dt = *dt;
    }
    if (horizon) {
      if (!(*horizon > 0.0)) throw epg::config_error("--horizon must be positive");
      cfg.horizon = *horizon;
    }
  }
};

// the reward-design problem: epidemic parameters, a perturbation-based
// choice model and a budget
struct DesignProblem {
  epg::EpidemicParams ep;
  epg::ChoiceConfig choice;
  double budget = 0.0;
  epg::DesignOptions opt;
};

DesignProblem parse_design_problem(const json& j) {
  epg::detail::check_keys(
      j, {"schema", "epidemic", "choice", "budget", "tol", "seed", "starts"},
      "design problem");
  if (epg::detail::need(j, "schema", "design problem").get<int>() != 1)
    throw epg::config_error("unsupported schema version");
  DesignProblem dp;
  const json& je = epg::detail::need(j, "epidemic", "design problem");
  epg::detail::check_keys(je, {"gamma", "psi", "theta", "beta", "cost"}, "epidemic");
  try {
    dp.ep = epg::EpidemicParams(
        epg::detail::num(epg::detail::need(je, "gamma", "epidemic"), "gamma"),
        epg::detail::num(epg::detail::need(je, "psi", "epidemic"), "psi"),
        epg::detail::num(epg::detail::need(je, "theta", "epidemic"), "theta"),
        epg::detail::vec(epg::detail::need(je, "beta", "epidemic"), "beta"),
        epg::detail::vec(epg::detail::need(je, "cost", "epidemic"), "cost"));
  } catch (const epg::parameter_error& e) {
    throw epg::config_error(std::string("epidemic: ") + e.what());
  }
  const json& jc = epg::detail::need(j, "choice", "design problem");
  epg::detail::check_keys(jc, {"kind", "mu", "base", "dist", "scale", "shape"},
                          "choice");
  dp.choice.kind = epg::detail::need(jc, "kind", "choice").get<std::string>();
  if (jc.contains("mu")) dp.choice.mu = epg::detail::num(jc["mu"], "mu");
  if (jc.contains("base")) dp.choice.base = jc["base"].get<std::string>();
  if (jc.contains("dist")) dp.choice.dist = jc["dist"].get<std::string>();
  if (jc.contains("scale")) dp.choice.scale = epg::detail::num(jc["scale"], "scale");
  if (jc.contains("shape")) dp.choice.shape = epg::detail::num(jc["shape"], "shape");
  dp.budget = epg::detail::num(epg::detail::need(j, "budget", "design problem"),
                               "budget");
  if (!(dp.budget > 0.0)) throw epg::config_error("budget must be positive");
  if (j.contains("tol")) dp.opt.tol = epg::detail::num(j["tol"], "tol");
  if (j.contains("seed")) dp.opt.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("starts")) dp.opt.starts = j["starts"].get<int>();
  return dp;
}

int cmd_simulate(const std::string& config, const std::string& out_dir,
                 const Overrides& ov) {
  epg::ScenarioConfig cfg = epg::parse_scenario(load_json(config));
  ov.apply(cfg);
  epg::RunReport rep = epg::run_scenario(cfg, out_dir);
  std::cout << rep.to_json().dump(2) << '\n';
  return 0;
}

int cmd_design(const std::string& config, const std::string& out_path) {
  json j = load_json(config);
  DesignProblem dp = parse_design_problem(j);
  epg::PerturbationModel m =
      epg::perturbation_for_design(dp.choice, dp.ep.n());
  epg::DesignResult res = epg::optimize_reward(dp.budget, m, dp.ep, dp.opt);
  json out;
  out["r_star"] = res.r;
  out["beta_star"] = res.beta_star;
  out["x_star"] = res.x;
  out["cost"] = res.cost;
  out["dispersion"] = res.dispersion;
  out["qbar"] = epg::solve_qbar(res.beta_star, res.r, m, dp.ep);
  out["version"] = epg::version;
  emit(out, out_path);
  return 0;
}

int cmd_bound(const std::string& config, std::optional<double> alpha,
              const std::string& out_path) {
  epg::ScenarioConfig cfg = epg::parse_scenario(load_json(config));
  const epg::EpidemicParams& ep = cfg.epidemic;
  double a;
  if (alpha) {
    if (!(*alpha >= 0.0)) throw epg::config_error("--alpha must be nonnegative");
    a = *alpha;
  } else {
    // derive alpha from the re-design pair: the scenario must start at the
    // equilibrium of a prior baseline reward, and the mechanism block gives
    // the new design
    if (!cfg.initial.from_prior)
      throw epg::config_error(
          "bound needs --alpha or an initial.prior_reward re-design pair");
    epg::PerturbationModel m = epg::perturbation_for_design(cfg.choice, ep.n());
    epg::Vec ct = ep.c_tilde();
    epg::Vec p_prior(ep.n());
    for (std::size_t i = 0; i < ep.n(); ++i)
      p_prior[i] = cfg.initial.prior_reward[i] - ct[i];
    epg::Vec x0 = epg::choice(m, p_prior);
    double b0 = epg::dot(ep.beta, x0);
    epg::Endemic e0 = epg::endemic_equilibrium(ep, b0);
    double bs = epg::b_storage(cfg.initial.prior_reward, cfg.mechanism.r_bar,
                               x0, 0.0, m, ep);
    a = bs + epg::epg_storage(b0 * e0.I, b0 * e0.R, b0, cfg.mechanism.beta_bar,
                              cfg.mechanism.upsilon, ep);
  }
  double pi = epg::pi_upsilon(a, cfg.mechanism.beta_bar, cfg.mechanism.upsilon, ep);
  double i_bar = epg::endemic_equilibrium(ep, cfg.mechanism.beta_bar).I;
  json out;
  out["alpha"] = a;
  out["pi"] = pi;
  out["I_bar"] = i_bar;
  out["bound"] = pi * i_bar;
  emit(out, out_path);
  return 0;
}

int cmd_learn(const std::string& config, std::optional<std::uint64_t> seed,
              const std::string& out_path) {
  epg::LearnStudyConfig cfg = epg::parse_learn_study(load_json(config));
  if (seed) cfg.seed = *seed;
  epg::LearnStudyReport rep = epg::run_learn_study(cfg);
  emit(rep.to_json(), out_path);
  return 0;
}

int cmd_sweep(const std::string& config, const std::string& out_dir,
              const Overrides& ov) {
  epg::ScenarioConfig cfg = epg::parse_scenario(load_json(config));
  ov.apply(cfg);
  if (!cfg.sweep) throw epg::config_error("config has no sweep block");
  epg::SweepReport rep = epg::run_sweep(cfg, out_dir);
  json out;
  out["parameter"] = rep.parameter;
  out["labels"] = rep.labels;
  out["combined_csv"] = rep.combined_csv;
  if (!rep.pairwise_sup.empty()) out["pairwise_sup_distance"] = rep.pairwise_sup;
  std::cout << out.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"epidemic population game simulator and design toolkit"};
  app.require_subcommand(1);

  std::string config, out_dir = ".", out_path;
  Overrides ov;
  std::optional<double> alpha;

  auto add_common = [&](CLI::App* sub, bool dir) {
    sub->add_option("--config", config, "JSON configuration file")->required();
    if (dir) {
      sub->add_option("--out-dir", out_dir, "output directory (default .)");
      sub->add_option("--seed", ov.seed, "override the master seed");
      sub->add_option("--dt", ov.dt, "override the integration step");
      sub->add_option("--horizon", ov.horizon, "override the time horizon");
    } else {
      sub->add_option("--out", out_path, "write the JSON result here instead of stdout");
    }
  };

  CLI::App* sim = app.add_subcommand("simulate",
                                     "integrate a scenario and write trajectory CSV");
  add_common(sim, true);
  CLI::App* des = app.add_subcommand("design",
                                     "solve the budget-constrained reward design");
  add_common(des, false);
  CLI::App* bnd = app.add_subcommand("bound",
                                     "anytime prevalence bound for a scenario");
  add_common(bnd, false);
  bnd->add_option("--alpha", alpha, "storage level (else derived from the re-design)");
  CLI::App* lrn = app.add_subcommand("learn",
                                     "survey study: interval narrowing and gate time");
  add_common(lrn, false);
  lrn->add_option("--seed", ov.seed, "override the study seed");
  CLI::App* swp = app.add_subcommand("sweep",
                                     "run a parameter sweep and combine the curves");
  add_common(swp, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(config, out_dir, ov);
    if (des->parsed()) return cmd_design(config, out_path);
    if (bnd->parsed()) return cmd_bound(config, alpha, out_path);
    if (lrn->parsed()) return cmd_learn(config, ov.seed, out_path);
    if (swp->parsed()) return cmd_sweep(config, out_dir, ov);
  } catch (const epg::config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const epg::parameter_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
