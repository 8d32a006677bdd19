#pragma once

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "epg/choice.hpp"
#include "epg/epidemic.hpp"
#include "epg/errors.hpp"
#include "epg/linalg.hpp"
#include "epg/storage.hpp"

namespace epg {

// Either a deterministic perturbation (entropy, barrier, custom) or an
// additive-noise representation.  Both expose the choice function the mean
// dynamics need; gumbel noise reduces to the softmax closed form.
class ChoiceModel {
 public:
  static ChoiceModel perturbation(PerturbationModel m) {
    ChoiceModel c;
    c.pert_ = std::make_shared<PerturbationModel>(std::move(m));
    return c;
  }
  static ChoiceModel noise(NoiseModel nm) {
    nm.validate();
    ChoiceModel c;
    c.noise_ = nm;
    c.has_noise_ = true;
    return c;
  }

  bool has_perturbation() const { return static_cast<bool>(pert_); }
  const PerturbationModel& model() const {
    if (!pert_) throw contract_error("not a perturbation-based choice model");
    return *pert_;
  }
  const NoiseModel& noise_model() const {
    if (!has_noise_) throw contract_error("not a noise-based choice model");
    return noise_;
  }

  bool noise_is_gumbel() const {
    return has_noise_ && (noise_.kind == NoiseKind::gumbel ||
                          (noise_.kind == NoiseKind::gev && noise_.shape == 0.0));
  }

  Vec choice_at(const Vec& p, const Vec* warm = nullptr) const {
    if (pert_) {
      SolveOptions opt;
      opt.warm_start = warm;
      return choice(*pert_, p, opt);
    }
    if (noise_is_gumbel()) return logit_choice(p, noise_.scale);
    return noise_choice(noise_, p);
  }

  // delta storage of the choice block; warm_px carries the inverse-choice
  // payoff between calls for the noise path
  double storage_at(const Vec& x, const Vec& p, Vec* warm_px = nullptr) const {
    if (pert_) return delta_storage(*pert_, x, p);
    if (noise_is_gumbel()) {
      PerturbationModel lm = PerturbationModel::logit(x.size(), noise_.scale);
      return delta_storage(lm, x, p);
    }
    // the implied convex perturbation of a general noise model has an
    // unbounded (sometimes non-integrable) gradient toward the simplex
    // boundary, so boundary states carry infinite storage
    for (double v : x)
      if (v <= 1e-12) return std::numeric_limits<double>::infinity();
    return noise_delta_storage(noise_, x, p, warm_px);
  }

 private:
  std::shared_ptr<PerturbationModel> pert_;
  NoiseModel noise_;
  bool has_noise_ = false;
};

struct ClosedLoopState {
  double I = 0.0;
  double R = 0.0;
  Vec x;
  double q = 0.0;
};

struct FieldEval {
  ClosedLoopState dot;
  Vec choice;  // perturbed best response at the current payoff
  Vec r;       // published reward (variant-aware)
  double B = 0.0;
  double G = 0.0;
};

// relative payoff faced by the agents; uniform shifts from the published
// reward variant never reach the choice function
inline Vec relative_payoff(const MechanismDesign& md, const EpidemicParams& ep,
                           double q) {
  Vec ct = ep.c_tilde();
  Vec p(ep.n());
  for (std::size_t i = 0; i < ep.n(); ++i)
    p[i] = q * ep.beta[i] + md.r_bar[i] - ct[i];
  return p;
}

inline FieldEval vector_field(const ClosedLoopState& s, const EpidemicParams& ep,
                              const MechanismDesign& md, const ChoiceModel& cm,
                              const Vec* warm = nullptr) {
  const std::size_t n = ep.n();
  check_simplex(s.x, n);
  if (!std::isfinite(s.I) || !std::isfinite(s.R) || !std::isfinite(s.q))
    throw parameter_error("state must be finite");
  if (!(s.I > 0.0)) throw domain_error("prevalence must stay positive");
  if (s.R < -1e-9) throw domain_error("recovered mass must stay nonnegative");

  double B = dot(ep.beta, s.x);
  if (!(B > ep.sigma())) throw domain_error("effective transmission fell to sigma");
  Vec p = relative_payoff(md, ep, s.q);
  Vec cp = cm.choice_at(p, warm);

  double sigma = ep.sigma(), eta = ep.eta();
  double ihat = eta * (1.0 - sigma / B);
  double rhat = (1.0 - eta) * (1.0 - sigma / B);

  FieldEval out;
  out.B = B;
  out.choice = cp;
  out.r = incentive(md, ep, s.q);
  out.G = (ihat - s.I) + eta * (std::log(s.I) - std::log(ihat)) +
          md.upsilon * md.upsilon * (md.beta_bar - B) +
          (B / ep.gamma) * (s.R - rhat) * (1.0 - eta - s.R);
  out.dot.I = (B * (1.0 - s.I - s.R) - sigma) * s.I;
  out.dot.R = ep.gamma * s.I - ep.omega() * s.R;
  out.dot.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.dot.x[i] = cp[i] - s.x[i];
  out.dot.q = md.kappa * out.G;
  return out;
}

struct IntegrateOptions {
  double dt = 0.05;
  double horizon = 0.0;
  std::size_t store_every = 1;
  bool detect_equilibrium = true;
  double equilibrium_tol = 1e-9;
  std::size_t equilibrium_steps = 100;
  bool compute_lyapunov = true;
  double t0 = 0.0;  // time stamp of the initial state
};

struct Trajectory {
  std::size_t n = 0;
  std::vector<double> t, I, R, q, B, cost, lyapunov;
  std::vector<Vec> x, r;
  bool settled = false;
  double settle_time = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> notes;

  std::size_t rows() const { return t.size(); }

  void write_csv(std::ostream& os) const;
  static Trajectory read_csv(std::istream& is);
};

namespace detail {

inline void rk_accumulate(ClosedLoopState& acc, const ClosedLoopState& k, double w) {
  acc.I += w * k.I;
  acc.R += w * k.R;
  acc.q += w * k.q;
  for (std::size_t i = 0; i < acc.x.size(); ++i) acc.x[i] += w * k.x[i];
}

inline ClosedLoopState rk_shift(const ClosedLoopState& s, const ClosedLoopState& k,
                                double w) {
  ClosedLoopState y = s;
  y.I += w * k.I;
  y.R += w * k.R;
  y.q += w * k.q;
  for (std::size_t i = 0; i < y.x.size(); ++i) y.x[i] += w * k.x[i];
  return y;
}

inline double deriv_inf_norm(const ClosedLoopState& k) {
  double m = std::max(std::abs(k.I), std::max(std::abs(k.R), std::abs(k.q)));
  for (double v : k.x) m = std::max(m, std::abs(v));
  return m;
}

inline bool state_finite(const ClosedLoopState& s) {
  return std::isfinite(s.I) && std::isfinite(s.R) && std::isfinite(s.q) &&
         all_finite(s.x);
}

}  // namespace detail

// Classic fixed-step RK4 on (I, R, x, q).  The population state is
// renormalized when accumulated drift from the simplex exceeds 1e-12 and
// any clamping of negative mass is logged in the trajectory notes.  A
// non-finite state aborts with the offending time.  When every derivative
// component stays below equilibrium_tol for equilibrium_steps consecutive
// steps the run stops early and is flagged as settled.
inline Trajectory integrate(const ClosedLoopState& initial, const EpidemicParams& ep,
                            const MechanismDesign& md, const ChoiceModel& cm,
                            const IntegrateOptions& opt) {
  ep.validate();
  md.validate(ep);
  if (!(opt.dt > 0.0) || !std::isfinite(opt.dt))
    throw parameter_error("dt must be positive");
  if (!(opt.horizon >= opt.dt)) throw parameter_error("horizon must cover one step");
  if (opt.store_every == 0) throw parameter_error("store_every must be positive");

  ClosedLoopState s = initial;
  check_simplex(s.x, ep.n());
  Trajectory tr;
  tr.n = ep.n();
  bool clamp_logged = false;

  Vec warm;      // previous best response, seeds the choice solver
  Vec warm_px;   // previous inverse-choice payoff, seeds the noise storage
  std::size_t quiet = 0;

  auto record = [&](double t, const FieldEval& fe) {
    tr.t.push_back(t);
    tr.I.push_back(s.I);
    tr.R.push_back(s.R);
    tr.q.push_back(s.q);
    tr.B.push_back(fe.B);
    tr.x.push_back(s.x);
    tr.r.push_back(fe.r);
    tr.cost.push_back(dot(fe.r, s.x));
    double ly = std::numeric_limits<double>::quiet_NaN();
    if (opt.compute_lyapunov) {
      Vec p = relative_payoff(md, ep, s.q);
      ly = cm.storage_at(s.x, p, &warm_px) +
           epg_storage(fe.B * s.I, fe.B * s.R, fe.B, md.beta_bar, md.upsilon, ep);
    }
    tr.lyapunov.push_back(ly);
  };

  double t = opt.t0;
  const double t_end = opt.t0 + opt.horizon;
  FieldEval k1 = vector_field(s, ep, md, cm, warm.empty() ? nullptr : &warm);
  record(t, k1);

  std::size_t step = 0;
  while (t < t_end - 1e-12) {
    double dt = std::min(opt.dt, t_end - t);
    const Vec* w = warm.empty() ? nullptr : &warm;
    FieldEval k2, k3, k4;
    try {
      k1 = vector_field(s, ep, md, cm, w);
      warm = k1.choice;
      k2 = vector_field(detail::rk_shift(s, k1.dot, dt / 2.0), ep, md, cm, &warm);
      k3 = vector_field(detail::rk_shift(s, k2.dot, dt / 2.0), ep, md, cm, &warm);
      k4 = vector_field(detail::rk_shift(s, k3.dot, dt), ep, md, cm, &warm);
    } catch (const domain_error& e) {
      throw numeric_error(std::string("integration left the domain: ") + e.what(), t);
    } catch (const parameter_error& e) {
      throw numeric_error(std::string("integration left the domain: ") + e.what(), t);
    }
    ClosedLoopState acc = s;
    detail::rk_accumulate(acc, k1.dot, dt / 6.0);
    detail::rk_accumulate(acc, k2.dot, dt / 3.0);
    detail::rk_accumulate(acc, k3.dot, dt / 3.0);
    detail::rk_accumulate(acc, k4.dot, dt / 6.0);
    s = std::move(acc);
    t += dt;
    ++step;

    if (!detail::state_finite(s)) throw numeric_error("state became non-finite", t);
    double mass = sum(s.x);
    if (std::abs(mass - 1.0) > 1e-12) {
      bool clamped = false;
      for (double& v : s.x)
        if (v < 0.0) {
          v = 0.0;
          clamped = true;
        }
      if (clamped && !clamp_logged) {
        std::ostringstream msg;
        msg << "clamped negative strategy mass at t=" << t;
        tr.notes.push_back(msg.str());
        clamp_logged = true;
      }
      double m2 = sum(s.x);
      if (!(m2 > 0.0)) throw numeric_error("strategy mass vanished", t);
      for (double& v : s.x) v /= m2;
    }

    FieldEval fe;
    try {
      fe = vector_field(s, ep, md, cm, &warm);
    } catch (const domain_error& e) {
      throw numeric_error(std::string("integration left the domain: ") + e.what(), t);
    } catch (const parameter_error& e) {
      throw numeric_error(std::string("integration left the domain: ") + e.what(), t);
    }
    if (step % opt.store_every == 0 || t >= t_end - 1e-12) record(t, fe);

    if (opt.detect_equilibrium) {
      quiet = detail::deriv_inf_norm(fe.dot) < opt.equilibrium_tol ? quiet + 1 : 0;
      if (quiet >= opt.equilibrium_steps) {
        tr.settled = true;
        tr.settle_time = t;
        if (step % opt.store_every != 0 && t < t_end - 1e-12) record(t, fe);
        break;
      }
    }
  }
  return tr;
}

inline ClosedLoopState terminal_state(const Trajectory& tr) {
  if (tr.rows() == 0) throw contract_error("empty trajectory");
  ClosedLoopState s;
  s.I = tr.I.back();
  s.R = tr.R.back();
  s.x = tr.x.back();
  s.q = tr.q.back();
  return s;
}

// ---------------------------------------------------------------------------
// CSV round trip; doubles are printed in shortest round-trip form so equal
// runs emit byte-identical files

namespace detail {

inline void csv_num(std::ostream& os, double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  double back = std::strtod(ss.str().c_str(), nullptr);
  if (back == v) {
    os << ss.str();
    return;
  }
  std::ostringstream s2;
  s2.precision(19);
  s2 << v;
  os << s2.str();
}

}  // namespace detail

inline void Trajectory::write_csv(std::ostream& os) const {
  os << "t,I,R,S";
  for (std::size_t i = 1; i <= n; ++i) os << ",x_" << i;
  os << ",q,B";
  for (std::size_t i = 1; i <= n; ++i) os << ",r_" << i;
  os << ",cost,lyapunov\n";
  for (std::size_t k = 0; k < rows(); ++k) {
    detail::csv_num(os, t[k]);
    os << ',';
    detail::csv_num(os, I[k]);
    os << ',';
    detail::csv_num(os, R[k]);
    os << ',';
    detail::csv_num(os, 1.0 - I[k] - R[k]);
    for (std::size_t i = 0; i < n; ++i) {
      os << ',';
      detail::csv_num(os, x[k][i]);
    }
    os << ',';
    detail::csv_num(os, q[k]);
    os << ',';
    detail::csv_num(os, B[k]);
    for (std::size_t i = 0; i < n; ++i) {
      os << ',';
      detail::csv_num(os, r[k][i]);
    }
    os << ',';
    detail::csv_num(os, cost[k]);
    os << ',';
    detail::csv_num(os, lyapunov[k]);
    os << '\n';
  }
}

inline Trajectory Trajectory::read_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw config_error("empty trajectory file");
  std::size_t n = 0;
  {
    std::stringstream hs(header);
    std::string col;
    while (std::getline(hs, col, ','))
      if (col.rfind("x_", 0) == 0) ++n;
  }
  if (n == 0) throw config_error("trajectory header lacks strategy columns");
  Trajectory tr;
  tr.n = n;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    Vec row;
    while (std::getline(ls, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    if (row.size() != 2 * n + 8) throw config_error("trajectory row has wrong width");
    std::size_t c = 0;
    tr.t.push_back(row[c++]);
    tr.I.push_back(row[c++]);
    tr.R.push_back(row[c++]);
    ++c;  // S is derived
    tr.x.emplace_back(row.begin() + c, row.begin() + c + n);
    c += n;
    tr.q.push_back(row[c++]);
    tr.B.push_back(row[c++]);
    tr.r.emplace_back(row.begin() + c, row.begin() + c + n);
    c += n;
    tr.cost.push_back(row[c++]);
    tr.lyapunov.push_back(row[c++]);
  }
  return tr;
}

}  // namespace epg
