#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "epg/bounds.hpp"
#include "epg/choice.hpp"
#include "epg/design.hpp"
#include "epg/dynamics.hpp"
#include "epg/epidemic.hpp"
#include "epg/errors.hpp"
#include "epg/learning.hpp"
#include "epg/storage.hpp"
#include "epg/version.hpp"

namespace epg {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// configuration

struct ChoiceConfig {
  std::string kind = "logit";  // logit | scaled | noise
  double mu = 1.0;             // logit and scaled
  std::string base = "logit";  // scaled: logit | log_barrier
  std::string dist = "gumbel"; // noise
  double scale = 1.0;
  double shape = 0.0;
};

struct InitialConfig {
  bool from_prior = false;
  Vec prior_reward;  // start at the stationary point of this baseline reward
  double I = 0.0, R = 0.0, q = 0.0;
  Vec x;
};

struct LearningConfig {
  Vec survey_reward;           // net rewards offered in the polls, range <= 2
  std::uint64_t wave_size = 1000;
  double cadence = 30.0;
  double confidence = 0.95;
  double accuracy = 0.05;
  double budget = 1.0;
  std::string redesign = "swap";  // swap | gated
  double alpha_gate = 0.0004;
  double mu_min = 1e-3, mu_max = 1e3;
};

struct SweepConfig {
  std::string parameter;  // kappa | upsilon | mu | noise_dist
  std::vector<double> values;
  std::vector<std::string> labels;  // noise_dist only
};

struct OutputConfig {
  std::string prefix = "run";
  std::uint64_t store_every = 1;
};

struct ScenarioConfig {
  int schema = 1;
  std::uint64_t seed = 1;
  EpidemicParams epidemic;
  ChoiceConfig choice;
  MechanismDesign mechanism;
  InitialConfig initial;
  double horizon = 0.0;
  double dt = 0.05;
  bool detect_equilibrium = true;
  std::optional<LearningConfig> learning;
  std::optional<SweepConfig> sweep;
  OutputConfig output;
};

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  if (!j.is_object()) throw config_error(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw config_error("unknown key '" + it.key() + "' in " + where);
  }
}

inline const json& need(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw config_error("missing key '" + std::string(key) + "' in " + where);
  return *it;
}

inline double num(const json& j, const std::string& where) {
  if (!j.is_number()) throw config_error(where + " must be a number");
  return j.get<double>();
}

inline Vec vec(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw config_error(where + " must be a nonempty array");
  Vec out;
  for (const auto& v : j) out.push_back(num(v, where + " entry"));
  return out;
}

}  // namespace detail

inline ScenarioConfig parse_scenario(const json& j) {
  using detail::check_keys;
  using detail::need;
  using detail::num;
  using detail::vec;
  check_keys(j, {"schema", "seed", "epidemic", "choice", "mechanism", "initial",
                 "horizon", "dt", "detect_equilibrium", "learning", "sweep",
                 "output"},
             "scenario");
  ScenarioConfig c;
  c.schema = need(j, "schema", "scenario").get<int>();
  if (c.schema != 1) throw config_error("unsupported schema version");
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();

  const json& je = need(j, "epidemic", "scenario");
  check_keys(je, {"gamma", "psi", "theta", "beta", "cost"}, "epidemic");
  try {
    c.epidemic = EpidemicParams(num(need(je, "gamma", "epidemic"), "gamma"),
                                num(need(je, "psi", "epidemic"), "psi"),
                                num(need(je, "theta", "epidemic"), "theta"),
                                vec(need(je, "beta", "epidemic"), "beta"),
                                vec(need(je, "cost", "epidemic"), "cost"));
  } catch (const parameter_error& e) {
    throw config_error(std::string("epidemic: ") + e.what());
  }
  const std::size_t n = c.epidemic.n();

  const json& jc = need(j, "choice", "scenario");
  check_keys(jc, {"kind", "mu", "base", "dist", "scale", "shape"}, "choice");
  c.choice.kind = need(jc, "kind", "choice").get<std::string>();
  if (c.choice.kind == "logit") {
    c.choice.mu = num(need(jc, "mu", "choice"), "mu");
  } else if (c.choice.kind == "scaled") {
    c.choice.mu = num(need(jc, "mu", "choice"), "mu");
    c.choice.base = need(jc, "base", "choice").get<std::string>();
    if (c.choice.base != "logit" && c.choice.base != "log_barrier")
      throw config_error("choice.base must be logit or log_barrier");
  } else if (c.choice.kind == "noise") {
    c.choice.dist = need(jc, "dist", "choice").get<std::string>();
    c.choice.scale = num(need(jc, "scale", "choice"), "scale");
    if (jc.contains("shape")) c.choice.shape = num(jc["shape"], "shape");
  } else {
    throw config_error("choice.kind must be logit, scaled or noise");
  }

  const json& jm = need(j, "mechanism", "scenario");
  check_keys(jm, {"beta_bar", "r_bar", "upsilon", "kappa", "h_variant"}, "mechanism");
  c.mechanism.beta_bar = num(need(jm, "beta_bar", "mechanism"), "beta_bar");
  c.mechanism.r_bar = vec(need(jm, "r_bar", "mechanism"), "r_bar");
  c.mechanism.upsilon = num(need(jm, "upsilon", "mechanism"), "upsilon");
  if (jm.contains("kappa")) c.mechanism.kappa = num(jm["kappa"], "kappa");
  if (jm.contains("h_variant")) {
    std::string h = jm["h_variant"].get<std::string>();
    if (h == "plain")
      c.mechanism.h_variant = HVariant::plain;
    else if (h == "nonnegative")
      c.mechanism.h_variant = HVariant::nonnegative;
    else
      throw config_error("mechanism.h_variant must be plain or nonnegative");
  }
  try {
    c.mechanism.validate(c.epidemic);
  } catch (const std::exception& e) {
    throw config_error(std::string("mechanism: ") + e.what());
  }

  const json& ji = need(j, "initial", "scenario");
  if (ji.contains("prior_reward")) {
    check_keys(ji, {"prior_reward"}, "initial");
    c.initial.from_prior = true;
    c.initial.prior_reward = vec(ji["prior_reward"], "prior_reward");
    if (c.initial.prior_reward.size() != n)
      throw config_error("initial.prior_reward has wrong dimension");
  } else {
    check_keys(ji, {"I", "R", "x", "q"}, "initial");
    c.initial.I = num(need(ji, "I", "initial"), "I");
    c.initial.R = num(need(ji, "R", "initial"), "R");
    c.initial.x = vec(need(ji, "x", "initial"), "x");
    if (ji.contains("q")) c.initial.q = num(ji["q"], "q");
    if (!(c.initial.I > 0.0) || !(c.initial.R >= 0.0) ||
        c.initial.I + c.initial.R > 1.0)
      throw config_error("initial (I, R) must satisfy I > 0, R >= 0, I + R <= 1");
    try {
      check_simplex(c.initial.x, n);
    } catch (const parameter_error& e) {
      throw config_error(std::string("initial.x: ") + e.what());
    }
  }

  c.horizon = num(need(j, "horizon", "scenario"), "horizon");
  if (j.contains("dt")) c.dt = num(j["dt"], "dt");
  if (!(c.horizon > 0.0) || !(c.dt > 0.0))
    throw config_error("horizon and dt must be positive");
  if (j.contains("detect_equilibrium"))
    c.detect_equilibrium = j["detect_equilibrium"].get<bool>();

  if (j.contains("learning")) {
    const json& jl = j["learning"];
    check_keys(jl, {"survey_reward", "wave_size", "cadence", "confidence",
                    "accuracy", "budget", "redesign", "alpha_gate", "mu_min",
                    "mu_max"},
               "learning");
    LearningConfig lc;
    lc.survey_reward = vec(need(jl, "survey_reward", "learning"), "survey_reward");
    if (lc.survey_reward.size() != n)
      throw config_error("learning.survey_reward has wrong dimension");
    double mn = lc.survey_reward[0], mx = lc.survey_reward[0];
    for (double v : lc.survey_reward) {
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
    if (mx - mn > 2.0 + 1e-12)
      throw config_error("learning.survey_reward range must not exceed 2");
    if (jl.contains("wave_size")) lc.wave_size = jl["wave_size"].get<std::uint64_t>();
    if (jl.contains("cadence")) lc.cadence = num(jl["cadence"], "cadence");
    if (jl.contains("confidence")) lc.confidence = num(jl["confidence"], "confidence");
    if (jl.contains("accuracy")) lc.accuracy = num(jl["accuracy"], "accuracy");
    lc.budget = num(need(jl, "budget", "learning"), "budget");
    if (jl.contains("redesign")) lc.redesign = jl["redesign"].get<std::string>();
    if (lc.redesign != "swap" && lc.redesign != "gated")
      throw config_error("learning.redesign must be swap or gated");
    if (jl.contains("alpha_gate")) lc.alpha_gate = num(jl["alpha_gate"], "alpha_gate");
    if (jl.contains("mu_min")) lc.mu_min = num(jl["mu_min"], "mu_min");
    if (jl.contains("mu_max")) lc.mu_max = num(jl["mu_max"], "mu_max");
    if (!(lc.wave_size > 0) || !(lc.cadence > 0.0) ||
        !(lc.confidence > 0.0 && lc.confidence < 1.0) || !(lc.accuracy > 0.0) ||
        !(lc.budget > 0.0) || !(lc.alpha_gate > 0.0) ||
        !(lc.mu_min > 0.0 && lc.mu_max > lc.mu_min))
      throw config_error("learning block has out-of-range values");
    c.learning = lc;
  }

  if (j.contains("sweep")) {
    const json& js = j["sweep"];
    check_keys(js, {"parameter", "values"}, "sweep");
    SweepConfig sc;
    sc.parameter = need(js, "parameter", "sweep").get<std::string>();
    const json& vals = need(js, "values", "sweep");
    if (!vals.is_array() || vals.empty())
      throw config_error("sweep.values must be a nonempty array");
    if (sc.parameter == "noise_dist") {
      for (const auto& v : vals) sc.labels.push_back(v.get<std::string>());
    } else if (sc.parameter == "kappa" || sc.parameter == "upsilon" ||
               sc.parameter == "mu") {
      for (const auto& v : vals) sc.values.push_back(detail::num(v, "sweep value"));
    } else {
      throw config_error("sweep.parameter must be kappa, upsilon, mu or noise_dist");
    }
    c.sweep = sc;
  }

  if (j.contains("output")) {
    const json& jo = j["output"];
    check_keys(jo, {"prefix", "store_every"}, "output");
    if (jo.contains("prefix")) c.output.prefix = jo["prefix"].get<std::string>();
    if (jo.contains("store_every"))
      c.output.store_every = jo["store_every"].get<std::uint64_t>();
    if (c.output.store_every == 0) throw config_error("output.store_every must be positive");
  }
  return c;
}

inline json to_json(const ScenarioConfig& c) {
  json j;
  j["schema"] = c.schema;
  j["seed"] = c.seed;
  j["epidemic"] = {{"gamma", c.epidemic.gamma}, {"psi", c.epidemic.psi},
                   {"theta", c.epidemic.theta}, {"beta", c.epidemic.beta},
                   {"cost", c.epidemic.cost}};
  json jc;
  jc["kind"] = c.choice.kind;
  if (c.choice.kind == "logit") jc["mu"] = c.choice.mu;
  if (c.choice.kind == "scaled") {
    jc["mu"] = c.choice.mu;
    jc["base"] = c.choice.base;
  }
  if (c.choice.kind == "noise") {
    jc["dist"] = c.choice.dist;
    jc["scale"] = c.choice.scale;
    if (c.choice.shape != 0.0) jc["shape"] = c.choice.shape;
  }
  j["choice"] = jc;
  j["mechanism"] = {{"beta_bar", c.mechanism.beta_bar},
                    {"r_bar", c.mechanism.r_bar},
                    {"upsilon", c.mechanism.upsilon},
                    {"kappa", c.mechanism.kappa},
                    {"h_variant", c.mechanism.h_variant == HVariant::plain
                                      ? "plain"
                                      : "nonnegative"}};
  if (c.initial.from_prior)
    j["initial"] = {{"prior_reward", c.initial.prior_reward}};
  else
    j["initial"] = {{"I", c.initial.I}, {"R", c.initial.R}, {"x", c.initial.x},
                    {"q", c.initial.q}};
  j["horizon"] = c.horizon;
  j["dt"] = c.dt;
  j["detect_equilibrium"] = c.detect_equilibrium;
  if (c.learning) {
    const LearningConfig& lc = *c.learning;
    j["learning"] = {{"survey_reward", lc.survey_reward},
                     {"wave_size", lc.wave_size},
                     {"cadence", lc.cadence},
                     {"confidence", lc.confidence},
                     {"accuracy", lc.accuracy},
                     {"budget", lc.budget},
                     {"redesign", lc.redesign},
                     {"alpha_gate", lc.alpha_gate},
                     {"mu_min", lc.mu_min},
                     {"mu_max", lc.mu_max}};
  }
  if (c.sweep) {
    json vals = json::array();
    if (c.sweep->parameter == "noise_dist")
      for (const auto& s : c.sweep->labels) vals.push_back(s);
    else
      for (double v : c.sweep->values) vals.push_back(v);
    j["sweep"] = {{"parameter", c.sweep->parameter}, {"values", vals}};
  }
  j["output"] = {{"prefix", c.output.prefix}, {"store_every", c.output.store_every}};
  return j;
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw config_error("invalid JSON in " + path + ": " + e.what());
  }
  return parse_scenario(j);
}

// ---------------------------------------------------------------------------
// model construction

inline NoiseKind noise_kind_from(const std::string& s) {
  if (s == "gumbel") return NoiseKind::gumbel;
  if (s == "normal") return NoiseKind::normal;
  if (s == "laplace") return NoiseKind::laplace;
  if (s == "logistic") return NoiseKind::logistic;
  if (s == "cauchy") return NoiseKind::cauchy;
  if (s == "gev") return NoiseKind::gev;
  throw config_error("unknown noise distribution: " + s);
}

inline ChoiceModel build_choice_model(const ChoiceConfig& cc, std::size_t n) {
  if (cc.kind == "logit")
    return ChoiceModel::perturbation(PerturbationModel::logit(n, cc.mu));
  if (cc.kind == "scaled") {
    PerturbationModel base = cc.base == "logit"
                                 ? PerturbationModel::logit(n, 1.0)
                                 : PerturbationModel::log_barrier(n, 1.0);
    return ChoiceModel::perturbation(PerturbationModel::scaled(cc.mu, base));
  }
  if (cc.kind != "noise")
    throw config_error("choice.kind must be logit, scaled or noise");
  NoiseModel nm;
  nm.kind = noise_kind_from(cc.dist);
  nm.scale = cc.scale;
  nm.shape = cc.shape;
  return ChoiceModel::noise(nm);
}

// the design and learning paths need an explicit perturbation; gumbel noise
// is entropy in disguise, other noise distributions are rejected
inline PerturbationModel perturbation_for_design(const ChoiceConfig& cc,
                                                 std::size_t n) {
  if (cc.kind == "logit") return PerturbationModel::logit(n, cc.mu);
  if (cc.kind == "scaled") {
    PerturbationModel base = cc.base == "logit"
                                 ? PerturbationModel::logit(n, 1.0)
                                 : PerturbationModel::log_barrier(n, 1.0);
    return PerturbationModel::scaled(cc.mu, base);
  }
  if (cc.kind == "noise" &&
      (cc.dist == "gumbel" || (cc.dist == "gev" && cc.shape == 0.0)))
    return PerturbationModel::logit(n, cc.scale);
  throw config_error("design requires a perturbation-based choice model");
}

inline ClosedLoopState initial_state(const ScenarioConfig& c, const ChoiceModel& cm) {
  ClosedLoopState s;
  if (!c.initial.from_prior) {
    s.I = c.initial.I;
    s.R = c.initial.R;
    s.x = c.initial.x;
    s.q = c.initial.q;
    return s;
  }
  Vec ct = c.epidemic.c_tilde();
  Vec p(c.epidemic.n());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = c.initial.prior_reward[i] - ct[i];
  s.x = cm.choice_at(p);
  double B = dot(c.epidemic.beta, s.x);
  Endemic e = endemic_equilibrium(c.epidemic, B);
  s.I = e.I;
  s.R = e.R;
  s.q = 0.0;
  return s;
}

// ---------------------------------------------------------------------------
// reports

struct GateUpdate {
  double t = 0.0;
  double alpha_before = 0.0;  // storage if the baseline reward is left alone
  double alpha_after = 0.0;   // storage at the accepted step
  double step = 0.0;          // accepted fraction of the way to the target
  Vec r_bar;
};

struct WaveRecord {
  std::uint64_t wave = 0;
  double t = 0.0;
  std::uint64_t pooled = 0;
  double epsilon = 0.0;
  Interval er{};
  MuInterval mu{};
  bool invertible = true;

  json to_json() const {
    json j;
    j["wave"] = wave;
    j["t"] = t;
    j["pooled_samples"] = pooled;
    j["epsilon"] = epsilon;
    j["expected_reward_interval"] = {er.lo, er.hi};
    if (invertible) {
      j["mu_interval"] = {mu.lo, mu.hi};
      j["mu_interval_clipped"] = {mu.clipped_lo, mu.clipped_hi};
    } else {
      j["mu_interval"] = nullptr;
    }
    return j;
  }
};

struct RunReport {
  std::string name;
  double terminal_t = 0.0, terminal_I = 0.0, terminal_R = 0.0;
  double terminal_q = 0.0, terminal_B = 0.0, terminal_cost = 0.0;
  double peak_I = 0.0, peak_ratio = 0.0;
  double i_star = 0.0;  // endemic prevalence at the final target rate
  double final_beta_bar = 0.0;
  bool settled = false;
  double settle_time = 0.0;
  std::vector<std::string> notes;
  // learning phase, when present
  bool learned = false;
  double t0 = 0.0;
  std::uint64_t pooled = 0;
  Interval er{};
  MuInterval mu_interval{};
  double mu_hat = 0.0;
  Vec r_star;
  double beta_star = 0.0;
  std::vector<GateUpdate> gate_updates;
  std::vector<WaveRecord> waves;
  std::string csv_path;
  std::optional<BoundCheck> bound;
  json config_echo;

  json to_json() const {
    json j;
    j["name"] = name;
    j["version"] = version;
    j["terminal"] = {{"t", terminal_t}, {"I", terminal_I}, {"R", terminal_R},
                     {"q", terminal_q}, {"B", terminal_B}, {"cost", terminal_cost}};
    j["peak_I"] = peak_I;
    j["peak_ratio"] = peak_ratio;
    j["i_star"] = i_star;
    j["final_beta_bar"] = final_beta_bar;
    j["settled"] = settled;
    if (settled) j["settle_time"] = settle_time;
    if (!notes.empty()) j["notes"] = notes;
    if (learned) {
      json l;
      l["t0"] = t0;
      l["pooled_samples"] = pooled;
      l["expected_reward_interval"] = {er.lo, er.hi};
      l["mu_interval"] = {mu_interval.lo, mu_interval.hi};
      l["mu_interval_clipped"] = {mu_interval.clipped_lo, mu_interval.clipped_hi};
      l["mu_hat"] = mu_hat;
      l["r_star"] = r_star;
      l["beta_star"] = beta_star;
      if (!waves.empty()) {
        json w = json::array();
        for (const auto& rec : waves) w.push_back(rec.to_json());
        l["waves"] = w;
      }
      if (!gate_updates.empty()) {
        json g = json::array();
        for (const auto& u : gate_updates)
          g.push_back({{"t", u.t}, {"alpha_before", u.alpha_before},
                       {"alpha_after", u.alpha_after}, {"step", u.step},
                       {"r_bar", u.r_bar}});
        l["gate_updates"] = g;
      }
      j["learning"] = l;
    }
    if (bound) {
      j["bound_check"] = {{"alpha", bound->alpha},     {"pi", bound->pi},
                          {"i_bar", bound->i_bar},     {"bound", bound->bound},
                          {"max_I", bound->max_I},     {"margin", bound->margin},
                          {"holds", bound->holds}};
    }
    if (!csv_path.empty()) j["trajectory_csv"] = csv_path;
    if (!config_echo.is_null()) j["config"] = config_echo;
    return j;
  }
};

namespace detail {

inline void append_trajectory(Trajectory& dst, const Trajectory& src) {
  dst.n = src.n;
  std::size_t k0 = 0;
  if (dst.rows() > 0 && src.rows() > 0 &&
      std::abs(src.t.front() - dst.t.back()) < 1e-9)
    k0 = 1;  // segments share the boundary sample
  for (std::size_t k = k0; k < src.rows(); ++k) {
    dst.t.push_back(src.t[k]);
    dst.I.push_back(src.I[k]);
    dst.R.push_back(src.R[k]);
    dst.q.push_back(src.q[k]);
    dst.B.push_back(src.B[k]);
    dst.x.push_back(src.x[k]);
    dst.r.push_back(src.r[k]);
    dst.cost.push_back(src.cost[k]);
    dst.lyapunov.push_back(src.lyapunov[k]);
  }
  dst.settled = src.settled;
  dst.settle_time = src.settle_time;
  for (const auto& nte : src.notes) dst.notes.push_back(nte);
}

inline void fill_summary(RunReport& rep, const Trajectory& tr,
                         const EpidemicParams& ep, double final_beta_bar) {
  rep.terminal_t = tr.t.back();
  rep.terminal_I = tr.I.back();
  rep.terminal_R = tr.R.back();
  rep.terminal_q = tr.q.back();
  rep.terminal_B = tr.B.back();
  rep.terminal_cost = tr.cost.back();
  rep.peak_I = *std::max_element(tr.I.begin(), tr.I.end());
  rep.final_beta_bar = final_beta_bar;
  rep.i_star = endemic_equilibrium(ep, final_beta_bar).I;
  rep.peak_ratio = rep.peak_I / rep.i_star;
  rep.settled = tr.settled;
  rep.settle_time = tr.settle_time;
  rep.notes = tr.notes;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// scenario execution

struct RunResult {
  Trajectory trajectory;
  RunReport report;
};

inline RunResult run_scenario_in_memory(const ScenarioConfig& cfg) {
  const EpidemicParams& ep = cfg.epidemic;
  ChoiceModel cm = build_choice_model(cfg.choice, ep.n());
  ClosedLoopState s = initial_state(cfg, cm);
  RunReport rep;
  rep.name = cfg.output.prefix;
  rep.config_echo = to_json(cfg);

  IntegrateOptions opt;
  opt.dt = cfg.dt;
  opt.store_every = cfg.output.store_every;
  opt.detect_equilibrium = cfg.detect_equilibrium;

  if (!cfg.learning) {
    opt.horizon = cfg.horizon;
    Trajectory tr = integrate(s, ep, cfg.mechanism, cm, opt);
    detail::fill_summary(rep, tr, ep, cfg.mechanism.beta_bar);
    // the recorded Lyapunov value at t = 0 is a valid alpha for the
    // anytime prevalence bound (the mechanism is fixed for the whole run)
    if (!tr.lyapunov.empty() && std::isfinite(tr.lyapunov.front()))
      rep.bound = anytime_bound_check(tr, tr.lyapunov.front(), cfg.mechanism, ep);
    return {std::move(tr), std::move(rep)};
  }

  // learning phase: integrate between survey waves until the accuracy gate
  // opens, then redesign and either swap the mechanism or walk the baseline
  // reward toward the redesigned one under the storage gate
  const LearningConfig& lc = *cfg.learning;
  PerturbationModel base = [&] {
    PerturbationModel truth = perturbation_for_design(cfg.choice, ep.n());
    if (!truth.is_logit())
      throw config_error("learning scenarios need a logit-family truth model");
    return PerturbationModel::logit(ep.n(), 1.0);
  }();
  double mu_true = perturbation_for_design(cfg.choice, ep.n()).logit_mu();

  MechanismDesign md = cfg.mechanism;
  Trajectory full;
  double t = 0.0;
  std::vector<double> pooled_samples;
  std::uint64_t wave = 0;
  opt.detect_equilibrium = false;  // the phase boundaries drive the schedule

  while (t < cfg.horizon - 1e-9) {
    double block = std::min(lc.cadence, cfg.horizon - t);
    opt.horizon = block;
    opt.t0 = t;
    Trajectory seg = integrate(s, ep, md, cm, opt);
    s = terminal_state(seg);
    detail::append_trajectory(full, seg);
    t += block;
    if (t >= cfg.horizon - 1e-9) break;

    ++wave;
    std::vector<double> draws = simulate_survey(base, mu_true, lc.survey_reward,
                                                lc.wave_size,
                                                mix_seed(cfg.seed, wave));
    pooled_samples.insert(pooled_samples.end(), draws.begin(), draws.end());
    WaveRecord wr;
    wr.wave = wave;
    wr.t = t;
    wr.pooled = pooled_samples.size();
    wr.epsilon = chebyshev_epsilon(pooled_samples.size(), lc.confidence);
    wr.er = chebyshev_interval(pooled_samples, lc.confidence);
    try {
      wr.mu = invert_mu(wr.er, lc.survey_reward, base, lc.mu_min, lc.mu_max);
    } catch (const domain_error&) {
      wr.invertible = false;
    }
    rep.waves.push_back(wr);
    if (wr.epsilon <= lc.accuracy) break;
  }

  if (rep.waves.empty() || rep.waves.back().epsilon > lc.accuracy ||
      !rep.waves.back().invertible)
    throw domain_error("horizon ended before the survey accuracy gate opened");

  rep.learned = true;
  rep.t0 = t;
  rep.pooled = pooled_samples.size();
  rep.er = rep.waves.back().er;
  rep.mu_interval = rep.waves.back().mu;
  rep.mu_hat = invert_expected_reward(rep.er.mid(), lc.survey_reward, base,
                                      lc.mu_min, lc.mu_max);

  DesignResult ds = optimize_reward(lc.budget,
                                    PerturbationModel::scaled(rep.mu_hat, base), ep);
  rep.r_star = ds.r;
  rep.beta_star = ds.beta_star;

  md.beta_bar = ds.beta_star;
  md.validate(ep);
  if (lc.redesign == "swap") {
    md.r_bar = ds.r;
    opt.horizon = cfg.horizon - t;
    opt.t0 = t;
    opt.detect_equilibrium = cfg.detect_equilibrium;
    Trajectory seg = integrate(s, ep, md, cm, opt);
    detail::append_trajectory(full, seg);
  } else {
    // gated walk: every cadence, move r_bar as far toward the redesigned
    // reward as the storage gate allows (bisection on the step fraction)
    Vec warm_px;
    auto alpha_of = [&](const Vec& rb) {
      Vec ct = ep.c_tilde();
      Vec p(ep.n());
      for (std::size_t i = 0; i < ep.n(); ++i)
        p[i] = s.q * ep.beta[i] + rb[i] - ct[i];
      double B = dot(ep.beta, s.x);
      return cm.storage_at(s.x, p, &warm_px) +
             epg_storage(B * s.I, B * s.R, B, md.beta_bar, md.upsilon, ep);
    };
    while (t < cfg.horizon - 1e-9) {
      GateUpdate upd;
      upd.t = t;
      upd.alpha_before = alpha_of(md.r_bar);
      Vec target = ds.r;
      auto blend = [&](double w) {
        Vec rb(ep.n());
        for (std::size_t i = 0; i < ep.n(); ++i)
          rb[i] = md.r_bar[i] + w * (target[i] - md.r_bar[i]);
        return rb;
      };
      double step = 0.0;
      if (alpha_of(blend(1.0)) < lc.alpha_gate) {
        step = 1.0;
      } else if (alpha_of(md.r_bar) < lc.alpha_gate) {
        double a = 0.0, b = 1.0;
        for (int it = 0; it < 30; ++it) {
          double mid = 0.5 * (a + b);
          (alpha_of(blend(mid)) < lc.alpha_gate ? a : b) = mid;
        }
        step = a;
      }
      md.r_bar = blend(step);
      upd.step = step;
      upd.alpha_after = alpha_of(md.r_bar);
      upd.r_bar = md.r_bar;
      rep.gate_updates.push_back(upd);

      double block = std::min(lc.cadence, cfg.horizon - t);
      opt.horizon = block;
      opt.t0 = t;
      Trajectory seg = integrate(s, ep, md, cm, opt);
      s = terminal_state(seg);
      detail::append_trajectory(full, seg);
      t += block;
    }
  }

  detail::fill_summary(rep, full, ep, md.beta_bar);
  return {std::move(full), std::move(rep)};
}

inline RunReport run_scenario(const ScenarioConfig& cfg, const std::string& out_dir) {
  RunResult res = run_scenario_in_memory(cfg);
  std::filesystem::create_directories(out_dir);
  std::filesystem::path dir(out_dir);
  std::filesystem::path csv = dir / (cfg.output.prefix + ".csv");
  {
    std::ofstream os(csv);
    if (!os) throw config_error("cannot write " + csv.string());
    res.trajectory.write_csv(os);
  }
  res.report.csv_path = csv.string();
  std::filesystem::path js = dir / (cfg.output.prefix + ".json");
  std::ofstream os(js);
  if (!os) throw config_error("cannot write " + js.string());
  os << res.report.to_json().dump(2) << '\n';
  return res.report;
}

// ---------------------------------------------------------------------------
// parameter sweeps: one run per value over a shared seed, plus a combined
// long-format table for overlay plotting

struct SweepReport {
  std::string parameter;
  std::vector<std::string> labels;
  std::vector<RunReport> runs;
  std::vector<std::vector<double>> pairwise_sup;  // filled for noise sweeps
  std::string combined_csv;

  json to_json() const {
    json j;
    j["parameter"] = parameter;
    j["labels"] = labels;
    json rr = json::array();
    for (const auto& r : runs) rr.push_back(r.to_json());
    j["runs"] = rr;
    if (!pairwise_sup.empty()) j["pairwise_sup_distance"] = pairwise_sup;
    if (!combined_csv.empty()) j["combined_csv"] = combined_csv;
    j["version"] = version;
    return j;
  }
};

inline SweepReport run_sweep(const ScenarioConfig& cfg, const std::string& out_dir) {
  if (!cfg.sweep) throw config_error("config has no sweep block");
  const SweepConfig& sw = *cfg.sweep;
  SweepReport rep;
  rep.parameter = sw.parameter;

  std::vector<ScenarioConfig> children;
  std::vector<std::string> cell;  // value column of the combined table
  if (sw.parameter == "noise_dist") {
    for (const std::string& d : sw.labels) {
      ScenarioConfig c = cfg;
      c.sweep.reset();
      c.choice.kind = "noise";
      c.choice.dist = d;
      c.output.prefix = cfg.output.prefix + "_" + d;
      c.detect_equilibrium = false;  // uniform grids for curve comparison
      children.push_back(std::move(c));
      rep.labels.push_back(d);
      cell.push_back(d);
    }
  } else {
    for (double v : sw.values) {
      ScenarioConfig c = cfg;
      c.sweep.reset();
      if (sw.parameter == "kappa")
        c.mechanism.kappa = v;
      else if (sw.parameter == "upsilon")
        c.mechanism.upsilon = v;
      else if (sw.parameter == "mu")
        c.choice.mu = v;
      std::ostringstream label;
      label << sw.parameter << "_" << v;
      c.output.prefix = cfg.output.prefix + "_" + label.str();
      c.detect_equilibrium = false;
      children.push_back(std::move(c));
      rep.labels.push_back(label.str());
      std::ostringstream vtxt;
      detail::csv_num(vtxt, v);
      cell.push_back(vtxt.str());
    }
  }

  // members run concurrently (they are pure given their configs); results
  // are collected in declaration order so output is deterministic
  std::vector<std::future<RunResult>> futures;
  futures.reserve(children.size());
  for (const auto& child : children)
    futures.push_back(std::async(std::launch::async,
                                 [&child] { return run_scenario_in_memory(child); }));

  std::vector<Trajectory> trajs;
  std::filesystem::create_directories(out_dir);
  for (std::size_t i = 0; i < futures.size(); ++i) {
    RunResult res = futures[i].get();
    std::filesystem::path csv =
        std::filesystem::path(out_dir) / (children[i].output.prefix + ".csv");
    std::ofstream os(csv);
    if (!os) throw config_error("cannot write " + csv.string());
    res.trajectory.write_csv(os);
    res.report.csv_path = csv.string();
    rep.runs.push_back(std::move(res.report));
    trajs.push_back(std::move(res.trajectory));
  }

  if (sw.parameter == "noise_dist") {
    double peak = 0.0;
    for (const auto& tr : trajs)
      peak = std::max(peak, *std::max_element(tr.I.begin(), tr.I.end()));
    rep.pairwise_sup.assign(trajs.size(), std::vector<double>(trajs.size(), 0.0));
    for (std::size_t a = 0; a < trajs.size(); ++a)
      for (std::size_t b = a + 1; b < trajs.size(); ++b) {
        std::size_t rows = std::min(trajs[a].rows(), trajs[b].rows());
        double d = 0.0;
        for (std::size_t k = 0; k < rows; ++k)
          d = std::max(d, std::abs(trajs[a].I[k] - trajs[b].I[k]));
        d /= peak;
        rep.pairwise_sup[a][b] = rep.pairwise_sup[b][a] = d;
      }
  }

  std::filesystem::path comb =
      std::filesystem::path(out_dir) / (cfg.output.prefix + "_sweep.csv");
  {
    std::ofstream os(comb);
    if (!os) throw config_error("cannot write " + comb.string());
    os << "parameter,value,t,I,I_ratio,cost\n";
    for (std::size_t i = 0; i < trajs.size(); ++i) {
      double istar = rep.runs[i].i_star;
      for (std::size_t k = 0; k < trajs[i].rows(); ++k) {
        os << sw.parameter << ',' << cell[i] << ',';
        detail::csv_num(os, trajs[i].t[k]);
        os << ',';
        detail::csv_num(os, trajs[i].I[k]);
        os << ',';
        detail::csv_num(os, trajs[i].I[k] / istar);
        os << ',';
        detail::csv_num(os, trajs[i].cost[k]);
        os << '\n';
      }
    }
  }
  rep.combined_csv = comb.string();
  std::filesystem::path js =
      std::filesystem::path(out_dir) / (cfg.output.prefix + "_sweep.json");
  std::ofstream os(js);
  if (!os) throw config_error("cannot write " + js.string());
  os << rep.to_json().dump(2) << '\n';
  return rep;
}

// ---------------------------------------------------------------------------
// standalone survey study: simulate waves against a known response scale and
// report how the pooled estimate narrows until the accuracy gate opens

struct LearnStudyConfig {
  int schema = 1;
  std::uint64_t seed = 1;
  double mu_true = 1.0;
  Vec survey_reward;
  std::uint64_t wave_size = 1000;
  double cadence = 30.0;
  double confidence = 0.95;
  double accuracy = 0.05;
  std::uint64_t max_waves = 64;
  double mu_min = 1e-3, mu_max = 1e3;
};

inline LearnStudyConfig parse_learn_study(const json& j) {
  using detail::need;
  using detail::num;
  detail::check_keys(j, {"schema", "seed", "mu_true", "survey_reward",
                         "wave_size", "cadence", "confidence", "accuracy",
                         "max_waves", "mu_min", "mu_max"},
                     "learn study");
  LearnStudyConfig c;
  c.schema = need(j, "schema", "learn study").get<int>();
  if (c.schema != 1) throw config_error("unsupported schema version");
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  c.mu_true = num(need(j, "mu_true", "learn study"), "mu_true");
  c.survey_reward = detail::vec(need(j, "survey_reward", "learn study"),
                                "survey_reward");
  if (j.contains("wave_size")) c.wave_size = j["wave_size"].get<std::uint64_t>();
  if (j.contains("cadence")) c.cadence = num(j["cadence"], "cadence");
  if (j.contains("confidence")) c.confidence = num(j["confidence"], "confidence");
  if (j.contains("accuracy")) c.accuracy = num(j["accuracy"], "accuracy");
  if (j.contains("max_waves")) c.max_waves = j["max_waves"].get<std::uint64_t>();
  if (j.contains("mu_min")) c.mu_min = num(j["mu_min"], "mu_min");
  if (j.contains("mu_max")) c.mu_max = num(j["mu_max"], "mu_max");
  if (!(c.mu_true > 0.0) || c.survey_reward.size() < 2 || !(c.wave_size > 0) ||
      !(c.cadence > 0.0) || !(c.confidence > 0.0 && c.confidence < 1.0) ||
      !(c.accuracy > 0.0) || !(c.max_waves > 0) ||
      !(c.mu_min > 0.0 && c.mu_max > c.mu_min))
    throw config_error("learn study has out-of-range values");
  return c;
}

struct LearnStudyReport {
  std::vector<WaveRecord> waves;
  bool gate_opened = false;
  double t0 = 0.0;
  double mu_hat = 0.0;

  json to_json() const {
    json j;
    json w = json::array();
    for (const auto& rec : waves) w.push_back(rec.to_json());
    j["waves"] = w;
    j["gate_opened"] = gate_opened;
    if (gate_opened) {
      j["t0"] = t0;
      j["mu_hat"] = mu_hat;
    }
    j["version"] = version;
    return j;
  }
};

inline LearnStudyReport run_learn_study(const LearnStudyConfig& c) {
  PerturbationModel base = PerturbationModel::logit(c.survey_reward.size(), 1.0);
  LearnStudyReport rep;
  std::vector<double> pooled;
  for (std::uint64_t wave = 1; wave <= c.max_waves; ++wave) {
    std::vector<double> draws = simulate_survey(base, c.mu_true, c.survey_reward,
                                                c.wave_size,
                                                mix_seed(c.seed, wave));
    pooled.insert(pooled.end(), draws.begin(), draws.end());
    WaveRecord wr;
    wr.wave = wave;
    wr.t = c.cadence * static_cast<double>(wave);
    wr.pooled = pooled.size();
    wr.epsilon = chebyshev_epsilon(pooled.size(), c.confidence);
    wr.er = chebyshev_interval(pooled, c.confidence);
    try {
      wr.mu = invert_mu(wr.er, c.survey_reward, base, c.mu_min, c.mu_max);
    } catch (const domain_error&) {
      wr.invertible = false;
    }
    rep.waves.push_back(wr);
    if (wr.epsilon <= c.accuracy) {
      rep.gate_opened = true;
      rep.t0 = wr.t;
      rep.mu_hat = invert_expected_reward(wr.er.mid(), c.survey_reward, base,
                                          c.mu_min, c.mu_max);
      break;
    }
  }
  return rep;
}

}  // namespace epg
