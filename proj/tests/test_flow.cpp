#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <gfol/flow.hpp>

#include "testutil.hpp"

using namespace gfol;
using Catch::Approx;
using gfol::test::code_of;

namespace {

const LieFoliationModel& h23() {
  static auto m = LieFoliationModel::heisenberg({2.0, 3.0});
  return m;
}

LieFoliationModel abelian3() {
  return LieFoliationModel::make("abelian", 3, {2}, {"e1", "e2", "xi"}, BracketTable{},
                                 Matrix::Identity(3, 3));
}

}  // namespace

TEST_CASE("flow right-hand side at the base metric") {
  Matrix rhs = flow_rhs(h23(), h23().metric(), 1.0);
  Vector want(4);
  want << -6.0, -6.0, -16.0, -16.0;
  for (int a = 0; a < 4; ++a) REQUIRE(rhs(a, a) == want(a));
  REQUIRE(rhs(0, 1) == 0.0);
  REQUIRE(rhs(2, 3) == 0.0);
  // the vertical block and the cross block never move
  REQUIRE(rhs(4, 4) == 0.0);
  REQUIRE(rhs(0, 4) == 0.0);
  REQUIRE(rhs(4, 0) == 0.0);
}

TEST_CASE("closed form eigenvalue solution") {
  REQUIRE(format_g12(closed_form_mu(4.0, 1.0, -0.5)) == "1.11296786604");
  REQUIRE(closed_form_mu(4.0, 1.0, 0.0) == 4.0);

  // stationary at mu0 = p, limit p as t -> -inf
  for (double t : {-7.0, -1.0, 0.5}) REQUIRE(closed_form_mu(3.0, 3.0, t) == 3.0);
  REQUIRE(closed_form_mu(4.0, 1.0, -40.0) == Approx(1.0).margin(1e-12));

  // pole handling: mu0 > p blows up forward at t = log(mu0/(mu0-p))/(4p)
  REQUIRE(code_of([] { closed_form_mu(4.0, 1.0, 0.08); }) == ErrorCode::PoleReached);
  REQUIRE(code_of([] { closed_form_mu(4.0, 1.0, 1e6); }) == ErrorCode::PoleReached);
  REQUIRE(closed_form_mu(1.0, 2.0, 1e6) == 0.0);  // decaying branch survives
  REQUIRE(closed_form_mu(2.0, 2.0, 1e6) == 2.0);
  REQUIRE(code_of([] { closed_form_mu(0.0, 1.0, -1.0); }) == ErrorCode::BadParams);
  REQUIRE(code_of([] { closed_form_mu(1.0, -1.0, -1.0); }) == ErrorCode::BadParams);
}

TEST_CASE("comparison closed form") {
  REQUIRE(format_g12(comparison_closed_form(1.0, 0.0, 1.0, -1.0)) == "1.96402758008");
  REQUIRE(comparison_closed_form(1.0, 0.0, 1.0, -1.0) ==
          Approx(2.0 / (1.0 + std::exp(-4.0))).margin(1e-12));
  REQUIRE(comparison_closed_form(0.5, 1.0, 1.0, -30.0) == Approx(1.0).margin(1e-12));

  REQUIRE(code_of([] { comparison_closed_form(1.0, 2.0, 1.0, -1.0); }) == ErrorCode::BadParams);
  REQUIRE(code_of([] { comparison_closed_form(0.0, 0.0, 1.0, -1.0); }) == ErrorCode::BadParams);
  REQUIRE(code_of([] { comparison_closed_form(1.0, 0.0, -1.0, -1.0); }) == ErrorCode::BadParams);
  REQUIRE(code_of([] { comparison_closed_form(3.0, 0.0, 1.0, 1e6); }) == ErrorCode::PoleReached);
  REQUIRE(comparison_closed_form(1.0, 0.0, 1.0, 1e6) == 0.0);

  // independent check: RK4 on mu' = 2 mu (mu + alpha - 2 phi) at alpha = 0
  double mu = 1.0;
  const double dt = -1e-4;
  auto f = [](double m) { return 2.0 * m * (m - 2.0); };
  for (int k = 0; k < 10000; ++k) {
    const double k1 = f(mu), k2 = f(mu + 0.5 * dt * k1), k3 = f(mu + 0.5 * dt * k2),
                 k4 = f(mu + dt * k3);
    mu += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  REQUIRE(mu == Approx(comparison_closed_form(1.0, 0.0, 1.0, -1.0)).margin(1e-12));
}

TEST_CASE("backward integration matches the closed form") {
  FlowConfig cfg;
  cfg.phi = 1.0;
  cfg.t_end = -5.0;
  auto traj = integrate_flow(h23(), cfg);

  REQUIRE(traj.converged);
  REQUIRE(traj.samples.size() == 501);
  REQUIRE(traj.samples.front().t == 0.0);
  REQUIRE(traj.samples.back().t == -5.0);

  double dev_cf = 0.0, dev_inv = 0.0;
  for (const auto& s : traj.samples) {
    const double m1 = closed_form_mu(4.0, 1.0, s.t), m2 = closed_form_mu(9.0, 1.0, s.t);
    dev_cf = std::max({dev_cf, std::abs(s.ric_eigs(0) - m1), std::abs(s.ric_eigs(1) - m1),
                       std::abs(s.ric_eigs(2) - m2), std::abs(s.ric_eigs(3) - m2)});
    // eigenvalue interpolation invariant mu_1 = 4 / g_00^2
    dev_inv = std::max(dev_inv, std::abs(s.g(0, 0) - 2.0 / std::sqrt(s.ric_eigs(0))));

    // residual oracles along the run
    REQUIRE(s.residuals.at("ode") <= 1e-6);
    REQUIRE(s.residuals.at("tsharp") <= 1e-6);
    REQUIRE(s.residuals.at("commutator") <= 1e-6);
    REQUIRE(s.residuals.at("compat") <= 1e-8);

    // the vertical and cross blocks are carried bit-for-bit
    REQUIRE(s.g(4, 4) == 1.0);
    REQUIRE(s.g(0, 4) == 0.0);
    REQUIRE(s.g(4, 3) == 0.0);
    // the eigenframe (here: diagonality) is preserved exactly
    REQUIRE(std::abs(s.g(0, 1)) + std::abs(s.g(0, 2)) + std::abs(s.g(2, 3)) == 0.0);
  }
  REQUIRE(dev_cf <= 1e-8);
  REQUIRE(dev_inv <= 1e-12);

  auto cr = convergence_report(traj, 1.0);
  REQUIRE(std::abs(cr.rate - 4.0) <= 0.08);  // 2 percent of 4 Phi
  REQUIRE(cr.rate == Approx(4.00085930041).margin(1e-6));
  REQUIRE(cr.fit_error <= 1e-2);
  REQUIRE(cr.n_samples >= 300);

  estimate_rate(traj, 1.0);
  REQUIRE(traj.rate_estimate.has_value());
  REQUIRE(*traj.rate_estimate == Approx(cr.rate));
}

TEST_CASE("analytic limit metric") {
  auto lim = limit_metric(h23(), 1.0);
  Vector want(4);
  want << 2.0, 2.0, 3.0, 3.0;
  REQUIRE(max_abs(Matrix(lim.h - Matrix(want.asDiagonal()))) <= 1e-12);
  REQUIRE(lim.fixed_point_residual <= 1e-10);

  FlowConfig cfg;
  cfg.phi = 1.0;
  cfg.t_end = -5.0;
  auto traj = integrate_flow(h23(), cfg);
  REQUIRE(max_abs(Matrix(h23().horizontal_block(traj.samples.back().g) - lim.h)) <= 1e-8);

  REQUIRE(code_of([] { limit_metric(LieFoliationModel::para_model(2, 2), 1.0); }) ==
          ErrorCode::NotPositive);
  REQUIRE(code_of([] { limit_metric(abelian3(), 1.0); }) == ErrorCode::NotPositive);
  REQUIRE(code_of([] { limit_metric(h23(), 0.0); }) == ErrorCode::BadParams);
}

TEST_CASE("deformation retraction on the heisenberg model") {
  FlowConfig cfg;
  cfg.phi = 1.0;
  cfg.t_end = -5.0;
  auto rep = retract_and_verify(h23(), cfg);

  REQUIRE(rep.traj.converged);
  REQUIRE(rep.at_t_end.label == "weak contact metric, non-normal");
  REQUIRE(rep.at_limit.label == "Sasakian (classical)");
  REQUIRE(rep.at_limit.slug == "sasakian-classical");
  REQUIRE(rep.at_limit.classical);
  REQUIRE(rep.q_identity_gap <= 1e-10);
  REQUIRE(rep.limit_normality <= 1e-10);
  REQUIRE(rep.kind_residual <= 1e-10);
  REQUIRE(rep.limit_fixed_point_residual <= 1e-10);
  REQUIRE(rep.k_min == Approx(1.0).margin(1e-9));
  REQUIRE(rep.k_max == Approx(1.0).margin(1e-9));
  REQUIRE(rep.traj.rate_estimate.has_value());
  REQUIRE(*rep.traj.rate_estimate == Approx(4.00085930041).margin(1e-6));

  FlowConfig shortcfg;
  shortcfg.t_end = -0.5;
  REQUIRE(code_of([&] { retract_and_verify(h23(), shortcfg); }) == ErrorCode::NotConverged);
}

TEST_CASE("deformation retraction on the scaled quaternionic model") {
  auto q2 = LieFoliationModel::quat_heisenberg(2.0);
  FlowConfig cfg;
  cfg.phi = 3.0;
  cfg.t_end = -3.0;
  auto rep = retract_and_verify(q2, cfg);

  REQUIRE(rep.traj.converged);
  Matrix hend = q2.horizontal_block(rep.traj.samples.back().g);
  REQUIRE(max_abs(Matrix(hend - 2.0 * Matrix::Identity(4, 4))) <= 1e-12);

  REQUIRE(rep.at_limit.label == "almost 3-contact metric (classical)");
  REQUIRE(rep.at_limit.classical);
  REQUIRE(rep.q_identity_gap <= 1e-10);
  REQUIRE(rep.kind_residual <= 1e-10);  // EQ0p with Q = id
  REQUIRE(rep.k_min == Approx(1.0).margin(1e-9));
  REQUIRE(rep.k_max == Approx(1.0).margin(1e-9));
  REQUIRE(*rep.traj.rate_estimate == Approx(12.0003254504).margin(1e-6));
  REQUIRE(std::abs(*rep.traj.rate_estimate - 12.0) <= 0.24);  // 2 percent of 4 Phi
}

TEST_CASE("trajectory sampling and serialization") {
  FlowConfig cfg;
  cfg.phi = 1.0;
  cfg.t_end = -3.0;
  auto traj = integrate_flow(h23(), cfg);

  REQUIRE(traj.samples.size() == 301);
  REQUIRE_FALSE(traj.converged);  // |mu - 1| is still ~5e-6 at t = -3
  REQUIRE(traj.samples.back().t == -3.0);
  REQUIRE(traj.samples[1].t == Approx(-0.01).margin(1e-15));

  const std::string csv = to_csv(traj);
  const std::string header = csv.substr(0, csv.find('\n'));
  REQUIRE(header == "t,mu_1,mu_2,mu_3,mu_4,res_ode,res_tsharp,res_commutator,res_compat");
  const std::string row0 = csv.substr(csv.find('\n') + 1);
  REQUIRE(row0.substr(0, row0.find('\n')) ==
          "0,4,4,9,9,3.34243111411e-07,3.57971856602e-08,0,0");

  Json j = to_json(traj);
  for (const char* key : {"model", "phi", "dt", "converged", "rate_estimate", "samples"})
    REQUIRE(j.contains(key));
  REQUIRE(j["model"] == "heisenberg:2,3");
  REQUIRE(j["converged"] == false);
  REQUIRE(j["rate_estimate"].is_null());
  REQUIRE(j["samples"].size() == 301);
  REQUIRE(j["samples"][0]["G"].size() == 25);
  REQUIRE(j["samples"][0]["residuals"].contains("normality"));

  SECTION("record stride") {
    FlowConfig c;
    c.t_end = -3.0;
    c.record_every = 100;
    REQUIRE(integrate_flow(h23(), c).samples.size() == 31);
  }
  SECTION("remainder steps") {
    FlowConfig c;
    c.t_end = -0.005;
    c.record_every = 1;
    auto t = integrate_flow(h23(), c);
    REQUIRE(t.samples.size() == 6);
    REQUIRE(t.samples.back().t == -0.005);

    c.t_end = -0.0052;
    auto t2 = integrate_flow(h23(), c);
    REQUIRE(t2.samples.size() == 7);
    REQUIRE(t2.samples[5].t == Approx(-0.005).margin(1e-15));
    REQUIRE(t2.samples.back().t == -0.0052);
  }
}

TEST_CASE("su2 sits at the fixed point already") {
  FlowConfig cfg;
  cfg.phi = 1.0;
  cfg.t_end = -3.0;
  auto traj = integrate_flow(LieFoliationModel::su2(), cfg);
  REQUIRE(traj.converged);
  for (const auto& s : traj.samples) {
    for (int i = 0; i < s.ric_eigs.size(); ++i)
      REQUIRE(s.ric_eigs(i) == Approx(1.0).margin(1e-12));
    REQUIRE(s.residuals.at("ode") <= 1e-12);
    REQUIRE(s.residuals.at("tsharp") <= 1e-12);
    REQUIRE(s.residuals.at("commutator") <= 1e-12);
    REQUIRE(s.residuals.at("compat") <= 1e-12);
  }
  REQUIRE(code_of([&] { convergence_report(traj, 1.0); }) == ErrorCode::InsufficientSamples);
  estimate_rate(traj, 1.0);
  REQUIRE_FALSE(traj.rate_estimate.has_value());
}

TEST_CASE("flow preconditions and guards") {
  SECTION("incompatible foliation") {
    Vector d(3);
    d << 1.0, 2.0, 1.0;
    auto stretched = LieFoliationModel::su2().with_metric(Matrix(d.asDiagonal()), "su2-stretched");
    FlowConfig c;
    c.t_end = -1.0;
    REQUIRE(code_of([&] { integrate_flow(stretched, c); }) == ErrorCode::NotCompatible);
  }
  SECTION("indefinite or flat starting data") {
    FlowConfig c;
    c.t_end = -1.0;
    REQUIRE(code_of([&] { integrate_flow(LieFoliationModel::para_model(2, 2), c); }) ==
            ErrorCode::NotPositive);
    REQUIRE(code_of([&] { integrate_flow(abelian3(), c); }) == ErrorCode::NotPositive);
  }
  SECTION("forward pole guard") {
    FlowConfig c;
    c.t_end = 1.0;  // pole of mu = 9 sits at log(9/8)/4 = 0.0294
    REQUIRE(code_of([&] { integrate_flow(h23(), c); }) == ErrorCode::PoleReached);

    c.t_end = 0.02;
    auto traj = integrate_flow(h23(), c);
    REQUIRE(traj.samples.size() == 3);
    const auto& last = traj.samples.back();
    REQUIRE(last.ric_eigs(3) == Approx(closed_form_mu(9.0, 1.0, 0.02)).margin(1e-5));
  }
  SECTION("config validation") {
    auto expect_bad = [&](auto mutate) {
      FlowConfig c;
      mutate(c);
      REQUIRE(code_of([&] { integrate_flow(h23(), c); }) == ErrorCode::BadParams);
    };
    expect_bad([](FlowConfig& c) { c.dt = 0.02; });
    expect_bad([](FlowConfig& c) { c.dt = 0.0; });
    expect_bad([](FlowConfig& c) { c.phi = 0.0; });
    expect_bad([](FlowConfig& c) { c.phi = -1.0; });
    expect_bad([](FlowConfig& c) { c.t_end = 0.0; });
    expect_bad([](FlowConfig& c) { c.record_every = 0; });
    expect_bad([](FlowConfig& c) { c.tol = 0.0; });
  }
}

TEST_CASE("scalar recurrence case") {
  ScalarOdeSpec spec{0.0, 4.0, 0.0, 3.0};
  auto r = scalar_case_i(spec, -3.0);
  REQUIRE(r.mu_plus == 1.0);
  REQUIRE(r.mu_minus == -1.0);
  REQUIRE(r.trajectory.size() == 301);
  REQUIRE(r.trajectory.front().second == 3.0);
  REQUIRE(r.trajectory.back().first == -3.0);
  REQUIRE(r.trajectory.back().second == Approx(1.0).margin(1e-8));

  ScalarOdeSpec stat{0.0, 4.0, 0.0, 1.0};
  auto rs = scalar_case_i(stat, -2.0);
  for (const auto& [t, mu] : rs.trajectory) {
    (void)t;
    REQUIRE(mu == 1.0);
  }

  REQUIRE(code_of([] { scalar_case_i(ScalarOdeSpec{0.0, 4.0, 0.0, -1.5}, -3.0); }) ==
          ErrorCode::BlowupDetected);
  REQUIRE(code_of([] { scalar_case_i(ScalarOdeSpec{0.0, -1.0, 0.0, 1.0}, -1.0); }) ==
          ErrorCode::BadParams);
  REQUIRE(code_of([] { scalar_case_i(ScalarOdeSpec{0.0, 4.0, 0.0, 1.0}, 1.0); }) ==
          ErrorCode::BadParams);

  // roots of 4 mu (mu + psi1) = psi2 for psi1 = 1, psi2 = 0
  auto r2 = scalar_case_i(ScalarOdeSpec{1.0, 0.0, 0.0, 0.5}, -0.5);
  REQUIRE(r2.mu_plus == 0.0);
  REQUIRE(r2.mu_minus == -1.0);
}

TEST_CASE("step halving shows fourth order accuracy") {
  auto err_at = [&](double dt) {
    FlowConfig c;
    c.phi = 1.0;
    c.t_end = -1.0;
    c.dt = dt;
    c.record_every = 1 << 20;
    auto traj = integrate_flow(h23(), c);
    Matrix h = h23().horizontal_block(traj.samples.back().g);
    const double x = 2.0 / std::sqrt(closed_form_mu(4.0, 1.0, -1.0));
    const double y = 3.0 / std::sqrt(closed_form_mu(9.0, 1.0, -1.0));
    Vector want(4);
    want << x, x, y, y;
    return max_abs(Matrix(h - Matrix(want.asDiagonal())));
  };
  const double ratio = err_at(1e-3) / err_at(5e-4);
  REQUIRE(ratio >= 12.0);
  REQUIRE(ratio <= 20.0);
}

TEST_CASE("default horizon") {
  REQUIRE(default_t_end(1.0) == -3.0);
  REQUIRE(default_t_end(3.0) == -3.0);
  REQUIRE(default_t_end(0.1) == -15.0);
}
