#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <vector>

#include "epg/design.hpp"
#include "epg/dynamics.hpp"
#include "epg/epidemic.hpp"
#include "epg/rng.hpp"

using Catch::Approx;
using epg::Vec;

namespace {

epg::EpidemicParams two_strategy_params() {
  return epg::EpidemicParams(0.1, 0.005, 0.0, {0.15, 0.19}, {0.2, 0.0});
}

epg::MechanismDesign reference_mechanism() {
  epg::MechanismDesign md;
  md.beta_bar = 0.1691;
  md.r_bar = {0.287, 0.0};
  md.upsilon = 3.0;
  md.kappa = 1.0;
  return md;
}

epg::ClosedLoopState reference_initial() {
  epg::ClosedLoopState s;
  s.I = 0.0158;
  s.R = 0.317;
  s.x = {1.0, 0.0};
  s.q = 0.0;
  return s;
}

epg::ChoiceModel unit_entropy() {
  return epg::ChoiceModel::perturbation(epg::PerturbationModel::logit(2, 1.0));
}

}  // namespace

TEST_CASE("endemic equilibrium evaluates the closed form") {
  auto ep = two_strategy_params();
  auto e1 = epg::endemic_equilibrium(ep, 0.1691);
  double eta = ep.eta();
  REQUIRE(e1.I == Approx(eta * (1.0 - ep.sigma() / 0.1691)).margin(1e-15));
  REQUIRE(e1.R == Approx((1.0 - eta) * (1.0 - ep.sigma() / 0.1691)).margin(1e-15));
  REQUIRE(e1.I == Approx(0.0195).margin(5e-4));
  REQUIRE(e1.R == Approx(0.3887).margin(5e-4));

  auto e2 = epg::endemic_equilibrium(ep, 0.1598);
  REQUIRE(e2.I == Approx(0.0178).margin(5e-5));

  auto e3 = epg::endemic_equilibrium(ep, ep.sigma() + 1e-12);
  REQUIRE(e3.I == Approx(0.0).margin(1e-10));

  REQUIRE_THROWS_AS(epg::endemic_equilibrium(ep, ep.sigma()), epg::domain_error);
  REQUIRE_THROWS_AS(epg::endemic_equilibrium(ep, 0.05), epg::domain_error);
}

TEST_CASE("vector field basics") {
  auto ep = two_strategy_params();
  auto md = reference_mechanism();
  auto cm = unit_entropy();
  auto s = reference_initial();
  s.x = {0.6, 0.4};

  // a frozen price state never moves
  auto frozen = md;
  frozen.kappa = 0.0;
  auto fe = epg::vector_field(s, ep, frozen, cm);
  REQUIRE(fe.dot.q == 0.0);

  // the replicator part pulls the population toward the best response
  Vec p = epg::relative_payoff(md, ep, s.q);
  Vec c = cm.choice_at(p);
  auto fe2 = epg::vector_field(s, ep, md, cm);
  REQUIRE(fe2.dot.x[0] == Approx(c[0] - s.x[0]).margin(1e-14));
  REQUIRE(fe2.dot.x[1] == Approx(c[1] - s.x[1]).margin(1e-14));

  // extinct prevalence is outside the model's domain
  auto dead = s;
  dead.I = 0.0;
  REQUIRE_THROWS_AS(epg::vector_field(dead, ep, md, cm), epg::domain_error);
}

TEST_CASE("closed loop settles at the designed operating point") {
  auto ep = two_strategy_params();
  auto res = epg::optimize_reward(0.15, epg::PerturbationModel::logit(2, 1.0), ep);

  epg::MechanismDesign md;
  md.beta_bar = res.beta_star;
  md.r_bar = res.r;
  md.upsilon = 3.0;
  md.kappa = 1.0;

  epg::IntegrateOptions opt;
  opt.horizon = 3000.0;
  opt.store_every = 20;
  opt.detect_equilibrium = false;
  auto tr = epg::integrate(reference_initial(), ep, md, unit_entropy(), opt);

  auto eq = epg::endemic_equilibrium(ep, md.beta_bar);
  REQUIRE(std::abs(tr.I.back() / eq.I - 1.0) < 0.01);
  REQUIRE(std::abs(tr.cost.back() - 0.15) < 0.002);
  REQUIRE(tr.cost.back() <= 0.15 + 1e-3);  // stationary budget feasibility

  double qbar = epg::solve_qbar(md.beta_bar, md.r_bar, epg::PerturbationModel::logit(2, 1.0), ep);
  REQUIRE(std::abs(tr.q.back() - qbar) < 1e-3);
  REQUIRE(std::abs(tr.B.back() - md.beta_bar) < 1e-3);
}

TEST_CASE("an equilibrium initial condition stays put") {
  auto ep = two_strategy_params();
  epg::MechanismDesign md;
  md.beta_bar = 0.1691;
  md.r_bar = {0.287, 0.0};
  md.upsilon = 3.0;
  md.kappa = 0.0;  // locked price, so only (I, R, x) have to be stationary
  auto cm = unit_entropy();

  epg::ClosedLoopState s;
  s.q = 0.0;
  s.x = cm.choice_at(epg::relative_payoff(md, ep, s.q));
  double B = epg::dot(ep.beta, s.x);
  auto eq = epg::endemic_equilibrium(ep, B);
  s.I = eq.I;
  s.R = eq.R;

  epg::IntegrateOptions opt;
  opt.horizon = 100.0;
  opt.detect_equilibrium = false;
  auto tr = epg::integrate(s, ep, md, cm, opt);
  for (std::size_t k = 0; k < tr.rows(); ++k) {
    REQUIRE(tr.I[k] == Approx(s.I).margin(1e-8));
    REQUIRE(tr.R[k] == Approx(s.R).margin(1e-8));
    REQUIRE(tr.x[k][0] == Approx(s.x[0]).margin(1e-8));
    REQUIRE(tr.q[k] == Approx(0.0).margin(1e-8));
  }
}

TEST_CASE("step halving confirms fourth-order accuracy") {
  auto ep = two_strategy_params();
  auto md = reference_mechanism();
  auto cm = unit_entropy();

  epg::IntegrateOptions coarse;
  coarse.dt = 0.05;
  coarse.horizon = 3000.0;
  coarse.detect_equilibrium = false;
  auto a = epg::integrate(reference_initial(), ep, md, cm, coarse);

  epg::IntegrateOptions fine = coarse;
  fine.dt = 0.025;
  fine.store_every = 2;
  auto b = epg::integrate(reference_initial(), ep, md, cm, fine);

  REQUIRE(a.rows() == b.rows());
  double sup = 0.0;
  for (std::size_t k = 0; k < a.rows(); ++k) {
    REQUIRE(a.t[k] == Approx(b.t[k]).margin(1e-9));
    sup = std::max(sup, std::abs(a.I[k] - b.I[k]));
    sup = std::max(sup, std::abs(a.R[k] - b.R[k]));
    sup = std::max(sup, std::abs(a.q[k] - b.q[k]));
    sup = std::max(sup, std::abs(a.B[k] - b.B[k]));
  }
  REQUIRE(sup < 1e-6);
}

TEST_CASE("state containment and storage decrease from random starts") {
  auto ep = two_strategy_params();
  auto md = reference_mechanism();
  auto cm = unit_entropy();
  epg::Rng rng(17);

  for (int trial = 0; trial < 20; ++trial) {
    epg::ClosedLoopState s;
    s.I = 0.001 + 0.2 * rng.uniform();
    s.R = 0.6 * rng.uniform();
    double x0 = rng.uniform();
    s.x = {x0, 1.0 - x0};
    s.q = -1.0 + 2.0 * rng.uniform();

    epg::IntegrateOptions opt;
    opt.horizon = 400.0;
    opt.detect_equilibrium = false;
    auto tr = epg::integrate(s, ep, md, cm, opt);

    for (std::size_t k = 0; k < tr.rows(); ++k) {
      REQUIRE(tr.I[k] >= 0.0);
      REQUIRE(tr.R[k] >= -1e-9);
      REQUIRE(tr.I[k] + tr.R[k] <= 1.0 + 1e-9);
      REQUIRE(tr.x[k][0] >= -1e-9);
      REQUIRE(tr.x[k][0] + tr.x[k][1] == Approx(1.0).margin(1e-9));
      if (k > 0) REQUIRE(tr.lyapunov[k] <= tr.lyapunov[k - 1] + 1e-6);
    }
  }
}

TEST_CASE("terminal states match the target equilibrium for random mechanisms") {
  auto ep = two_strategy_params();
  auto cm = unit_entropy();
  auto m = epg::PerturbationModel::logit(2, 1.0);
  epg::Rng rng(29);

  for (int trial = 0; trial < 10; ++trial) {
    epg::MechanismDesign md;
    md.beta_bar = 0.152 + 0.036 * rng.uniform();
    md.r_bar = {2.0 * rng.uniform(), 2.0 * rng.uniform()};
    md.upsilon = 3.0;
    md.kappa = 1.0;

    epg::IntegrateOptions opt;
    opt.horizon = 20000.0;  // generous; equilibrium detection stops early
    opt.store_every = 100;
    opt.detect_equilibrium = true;
    auto tr = epg::integrate(reference_initial(), ep, md, cm, opt);
    auto fin = epg::terminal_state(tr);

    double qbar = epg::solve_qbar(md.beta_bar, md.r_bar, m, ep);
    auto eq = epg::endemic_equilibrium(ep, md.beta_bar);
    Vec ct = ep.c_tilde();
    Vec pay(2);
    for (std::size_t i = 0; i < 2; ++i)
      pay[i] = qbar * ep.beta[i] + md.r_bar[i] - ct[i];
    Vec xbar = epg::choice(m, pay);

    REQUIRE(std::abs(fin.q - qbar) < 1e-3);
    REQUIRE(std::abs(tr.B.back() - md.beta_bar) < 1e-3);
    REQUIRE(std::abs(fin.I - eq.I) < 1e-3);
    REQUIRE(std::abs(fin.R - eq.R) < 1e-3);
    REQUIRE(std::abs(fin.x[0] - xbar[0]) < 1e-3);
  }
}

TEST_CASE("reward variants change payments but not trajectories") {
  auto ep = two_strategy_params();
  auto cm = unit_entropy();
  auto plain = reference_mechanism();
  auto shifted = plain;
  shifted.h_variant = epg::HVariant::nonnegative;

  epg::IntegrateOptions opt;
  opt.horizon = 300.0;
  opt.detect_equilibrium = false;
  auto a = epg::integrate(reference_initial(), ep, plain, cm, opt);
  auto b = epg::integrate(reference_initial(), ep, shifted, cm, opt);

  REQUIRE(a.rows() == b.rows());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    REQUIRE(a.I[k] == Approx(b.I[k]).margin(1e-8));
    REQUIRE(a.R[k] == Approx(b.R[k]).margin(1e-8));
    REQUIRE(a.q[k] == Approx(b.q[k]).margin(1e-8));
    REQUIRE(a.x[k][0] == Approx(b.x[k][0]).margin(1e-8));

    // published rewards differ by a uniform per-time shift and the
    // nonnegative variant never pays a negative amount
    double shift = b.r[k][0] - a.r[k][0];
    REQUIRE(b.r[k][1] - a.r[k][1] == Approx(shift).margin(1e-10));
    REQUIRE(b.r[k][0] >= -1e-12);
    REQUIRE(b.r[k][1] >= -1e-12);
  }
}

TEST_CASE("price pressure reduces the infection overshoot") {
  auto ep = two_strategy_params();
  auto cm = unit_entropy();
  auto eq = epg::endemic_equilibrium(ep, 0.1691);

  double prev = std::numeric_limits<double>::infinity();
  for (double kappa : {0.0, 1.0, 2.0, 5.0}) {
    auto md = reference_mechanism();
    md.kappa = kappa;
    epg::IntegrateOptions opt;
    opt.horizon = 1500.0;
    opt.store_every = 4;
    opt.detect_equilibrium = false;
    auto tr = epg::integrate(reference_initial(), ep, md, cm, opt);
    double peak = 0.0;
    for (double v : tr.I) peak = std::max(peak, v / eq.I);
    REQUIRE(peak <= prev + 1e-12);
    prev = peak;
  }
}

TEST_CASE("equilibrium detection stops the run early") {
  auto ep = two_strategy_params();
  auto md = reference_mechanism();
  auto cm = unit_entropy();

  epg::IntegrateOptions opt;
  opt.horizon = 20000.0;
  opt.store_every = 100;
  opt.detect_equilibrium = true;
  auto tr = epg::integrate(reference_initial(), ep, md, cm, opt);
  REQUIRE(tr.settled);
  REQUIRE(tr.settle_time > 0.0);
  REQUIRE(tr.settle_time < 20000.0);
  REQUIRE(tr.t.back() <= tr.settle_time + 1e-9);

  opt.detect_equilibrium = false;
  opt.horizon = 50.0;
  auto tr2 = epg::integrate(reference_initial(), ep, md, cm, opt);
  REQUIRE_FALSE(tr2.settled);
  REQUIRE(std::isnan(tr2.settle_time));
}

TEST_CASE("a blown-up integration aborts with the offending time") {
  auto ep = two_strategy_params();
  auto md = reference_mechanism();
  auto cm = unit_entropy();

  epg::IntegrateOptions opt;
  opt.dt = 500.0;
  opt.horizon = 5000.0;
  bool threw = false;
  try {
    epg::integrate(reference_initial(), ep, md, cm, opt);
  } catch (const epg::numeric_error& e) {
    threw = true;
    REQUIRE(e.time >= 0.0);
    REQUIRE(e.time <= 5000.0);
  }
  REQUIRE(threw);

  epg::IntegrateOptions bad;
  bad.dt = -1.0;
  bad.horizon = 10.0;
  REQUIRE_THROWS_AS(epg::integrate(reference_initial(), ep, md, cm, bad),
                    epg::parameter_error);
}
