#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gfol/error.hpp"
#include "gfol/geometry.hpp"
#include "gfol/linalg.hpp"
#include "gfol/model.hpp"
#include "gfol/structures.hpp"

namespace gfol {

/// Normalized partial Ricci flow d/dt g = -2 r_g + 2 Phi g^perp, integrated as
/// an ODE in the horizontal metric block: the brackets are fixed, so Theta_i
/// is constant and r_H = -sum_i Theta_i H^{-1} Theta_i is algebraic in H.  The
/// curvature-route r is checked against this elsewhere; here it would only
/// slow the stepper down.
struct FlowConfig {
  double phi = 1.0;                  ///< the normalization constant, > 0
  std::optional<double> t_end;       ///< default -max(3, 6/(4 phi))
  double dt = 1e-3;                  ///< fixed RK4 step, in (0, 1e-2]
  int record_every = 10;             ///< sample stride in steps
  double tol = 1e-8;                 ///< convergence tolerance on |Ric - phi id|
  std::optional<StructureKind> kind; ///< structure kind for the retraction context
};

inline double default_t_end(double phi) { return -std::max(3.0, 6.0 / (4.0 * phi)); }

struct FlowSample {
  double t = 0.0;
  Matrix g;                                 ///< full metric, vertical block untouched
  Vector ric_eigs;                          ///< eigenvalues of Ric^perp, ascending
  std::map<std::string, double> residuals;  ///< ode, tsharp, commutator, compat, normality
};

struct FlowTrajectory {
  std::string model_name;
  double phi = 1.0;
  double dt = 1e-3;
  std::vector<FlowSample> samples;
  bool converged = false;
  std::optional<double> rate_estimate;
};

namespace detail {

inline std::vector<Matrix> horizontal_thetas(const LieFoliationModel& model) {
  std::vector<Matrix> th;
  th.reserve(static_cast<size_t>(model.p()));
  for (int i = 0; i < model.p(); ++i) th.push_back(model.theta(i));
  return th;
}

inline Matrix rhs_h(const std::vector<Matrix>& thetas, const Matrix& h, double phi) {
  Eigen::PartialPivLU<Matrix> lu(h);
  Matrix r = Matrix::Zero(h.rows(), h.cols());
  for (const auto& th : thetas) r -= th * lu.solve(th);
  Matrix out = -2.0 * r + 2.0 * phi * h;
  return 0.5 * (out + out.transpose());
}

inline Matrix rk4_step(const std::vector<Matrix>& thetas, const Matrix& h, double dt, double phi) {
  const Matrix k1 = rhs_h(thetas, h, phi);
  const Matrix k2 = rhs_h(thetas, h + 0.5 * dt * k1, phi);
  const Matrix k3 = rhs_h(thetas, h + 0.5 * dt * k2, phi);
  const Matrix k4 = rhs_h(thetas, h + dt * k3, phi);
  return h + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline std::vector<Matrix> tsharps(const std::vector<Matrix>& thetas, const Matrix& h) {
  Eigen::PartialPivLU<Matrix> lu(h);
  std::vector<Matrix> ts;
  ts.reserve(thetas.size());
  for (const auto& th : thetas) ts.push_back(lu.solve(th.transpose()));
  return ts;
}

inline Matrix ric_alg(const std::vector<Matrix>& thetas, const Matrix& h) {
  Matrix ric = Matrix::Zero(h.rows(), h.cols());
  for (const auto& ts : tsharps(thetas, h)) ric -= ts * ts;
  return ric;
}

}  // namespace detail

/// Right-hand side -2 r_g + 2 Phi g^perp as a full matrix (zero on the
/// vertical block, which the flow never touches).
inline Matrix flow_rhs(const LieFoliationModel& model, const Matrix& g, double phi) {
  const Matrix h = model.horizontal_block(g);
  const Matrix rhs = detail::rhs_h(detail::horizontal_thetas(model), h, phi);
  Matrix out = Matrix::Zero(model.dim(), model.dim());
  const auto& hor = model.horizontal();
  for (int a = 0; a < model.hdim(); ++a)
    for (int b = 0; b < model.hdim(); ++b) out(hor[a], hor[b]) = rhs(a, b);
  return out;
}

/// The structure E-Q-phi assigns to a metric along the flow:
/// phi_i|_D = T#_i(g), Q|_D = (1/p) Ric^perp(g), eta^i the duals.
inline FramedStructure retracted_structure(const LieFoliationModel& model_at_g,
                                           StructureKind kind) {
  const LieFoliationModel& m = model_at_g;
  const int n = m.dim(), p = m.p(), hd = m.hdim();
  const auto& hor = m.horizontal();
  const Matrix h = m.horizontal_block(m.metric());
  const auto thetas = detail::horizontal_thetas(m);
  const auto ts = detail::tsharps(thetas, h);

  FramedStructure s;
  s.kind = kind;
  s.xis = m.vertical();
  for (int v : m.vertical()) s.etas.push_back(Vector::Unit(n, v));
  auto embed = [&](const Matrix& op) {
    Matrix out = Matrix::Zero(n, n);
    for (int a = 0; a < hd; ++a)
      for (int b = 0; b < hd; ++b) out(hor[a], hor[b]) = op(a, b);
    return out;
  };
  const int nphi = kind == StructureKind::p_contact ? p : 1;
  for (int i = 0; i < nphi; ++i) {
    Matrix phi = embed(ts[static_cast<size_t>(i)]);
    if (kind == StructureKind::p_contact)
      for (int j = 0; j < p; ++j)
        for (int k = 0; k < p; ++k) {
          const double e = eps3(i, j, k);
          if (e != 0.0) phi(m.vertical()[k], m.vertical()[j]) = e;
        }
    s.phis.push_back(phi);
  }
  Matrix ric = Matrix::Zero(hd, hd);
  for (const auto& t : ts) ric -= t * t;
  s.Q = embed(ric / static_cast<double>(p));
  for (int v : m.vertical()) s.Q(v, v) = 1.0;
  return s;
}

namespace detail {

inline FlowSample make_sample(const LieFoliationModel& model, const std::vector<Matrix>& thetas,
                              double t, const Matrix& h, double phi, StructureKind kind) {
  FlowSample s;
  s.t = t;
  s.g = model.assemble_metric(h);
  const Matrix ric = ric_alg(thetas, h);
  s.ric_eigs = g_selfadjoint_eigenvalues(ric, h);

  // (a), (b): the Ric^perp and T# evolution ODEs, finite-differenced with
  // micro RK4 steps (delta small enough that the FD error, not the
  // integrator, dominates)
  const double delta = 1e-6;
  const Matrix hp = rk4_step(thetas, h, +delta, phi);
  const Matrix hm = rk4_step(thetas, h, -delta, phi);
  const int hd = model.hdim();
  const Matrix id = Matrix::Identity(hd, hd);
  const auto ts = tsharps(thetas, h);

  const Matrix fd_ric = (ric_alg(thetas, hp) - ric_alg(thetas, hm)) / (2.0 * delta);
  Matrix rhs_ric = 2.0 * ric * (ric - 2.0 * phi * id);
  for (const auto& tsi : ts) rhs_ric -= 2.0 * tsi * ric * tsi;
  s.residuals["ode"] = max_abs(Matrix(fd_ric - rhs_ric));

  const auto tsp = tsharps(thetas, hp);
  const auto tsm = tsharps(thetas, hm);
  double res_ts = 0.0;
  for (size_t i = 0; i < ts.size(); ++i) {
    const Matrix fd = (tsp[i] - tsm[i]) / (2.0 * delta);
    res_ts = std::max(res_ts, max_abs(Matrix(fd - 2.0 * (ric - phi * id) * ts[i])));
  }
  s.residuals["tsharp"] = res_ts;

  // (c) nabla_xi Ric = [Ric, T#] and (d) compatibility, from the actual
  // connection of g(t)
  const LieFoliationModel mt = model.with_metric(s.g);
  Geometry geom(mt);
  Matrix ric_ext = geom.embed_horizontal(ric);
  double res_comm = 0.0;
  for (int i = 0; i < model.p(); ++i) {
    const Matrix& gv = geom.gamma()[static_cast<size_t>(model.vertical()[i])];
    const Matrix lhs = geom.restrict_horizontal(gv * ric_ext - ric_ext * gv);
    const Matrix rhs = ric * ts[static_cast<size_t>(i)] - ts[static_cast<size_t>(i)] * ric;
    res_comm = std::max(res_comm, max_abs(Matrix(lhs - rhs)));
  }
  s.residuals["commutator"] = res_comm;

  const CompatReport comp = check_compatible(geom);
  s.residuals["compat"] = std::max(comp.totally_geodesic, comp.riemannian);

  // normality of the E-Q-phi structure is reported, not asserted: it is
  // nonzero away from the limit on heterogeneous models
  s.residuals["normality"] = structure_normality(mt, retracted_structure(mt, kind));
  return s;
}

inline void validate_config(const FlowConfig& cfg) {
  if (!(cfg.phi > 0.0)) fail(ErrorCode::BadParams, "phi must be positive");
  if (!(cfg.dt > 0.0) || cfg.dt > 1e-2)
    fail(ErrorCode::BadParams, "dt must lie in (0, 1e-2]");
  if (cfg.record_every < 1) fail(ErrorCode::BadParams, "record_every must be >= 1");
  if (!(cfg.tol > 0.0)) fail(ErrorCode::BadParams, "tol must be positive");
}

}  // namespace detail

/// Integrates the normalized partial Ricci flow from t = 0 to cfg.t_end
/// (backward by default) with fixed-step RK4 on the horizontal block.
inline FlowTrajectory integrate_flow(const LieFoliationModel& model, const FlowConfig& cfg) {
  detail::validate_config(cfg);
  const double t_end = cfg.t_end.value_or(default_t_end(cfg.phi));
  if (t_end == 0.0) fail(ErrorCode::BadParams, "t_end must be nonzero");
  const StructureKind kind = cfg.kind.value_or(default_kind(model));

  const CompatReport comp = check_compatible(model);
  if (!comp.pass)
    fail(ErrorCode::NotCompatible,
         "the foliation is not totally geodesic Riemannian at G0 (residual " +
             std::to_string(std::max(comp.totally_geodesic, comp.riemannian)) + ")");
  if (!model.horizontal_posdef())
    fail(ErrorCode::NotPositive, "the flow needs a positive definite horizontal metric");

  const Matrix h0 = model.horizontal_block(model.metric());
  const auto thetas = detail::horizontal_thetas(model);
  const Vector mu0 = g_selfadjoint_eigenvalues(detail::ric_alg(thetas, h0), h0);
  if (!(mu0.minCoeff() > 0.0))
    fail(ErrorCode::NotPositive, "r_{G0} must be positive definite on the orthogonal distribution");

  if (t_end > 0.0) {
    const double mu_max = mu0.maxCoeff();
    if (mu_max > cfg.phi) {
      const double t_pole = std::log(mu_max / (mu_max - cfg.phi)) / (4.0 * cfg.phi);
      if (t_end >= t_pole)
        fail(ErrorCode::PoleReached, "forward horizon crosses the blowup time t = " +
                                         std::to_string(t_pole) + " of the top eigenvalue");
    }
  }

  FlowTrajectory traj;
  traj.model_name = model.name();
  traj.phi = cfg.phi;
  traj.dt = cfg.dt;

  const double dir = t_end > 0.0 ? 1.0 : -1.0;
  const long nsteps = std::lround(std::abs(t_end) / cfg.dt);
  const double rem = std::abs(t_end) - static_cast<double>(nsteps) * cfg.dt;

  Matrix h = h0;
  traj.samples.push_back(detail::make_sample(model, thetas, 0.0, h, cfg.phi, kind));

  auto step_checks = [&](double t) {
    if (!(min_eig_sym(h) > 0.0))
      fail(ErrorCode::PositivityLost,
           "horizontal metric lost positivity at t = " + std::to_string(t));
    if (max_abs(h) > 1e12)
      fail(ErrorCode::PoleReached, "metric blew up at t = " + std::to_string(t));
  };

  double t = 0.0;
  for (long k = 1; k <= nsteps; ++k) {
    h = detail::rk4_step(thetas, h, dir * cfg.dt, cfg.phi);
    h = Matrix(0.5 * (h + h.transpose()));
    t = dir * static_cast<double>(k) * cfg.dt;
    step_checks(t);
    if (k % cfg.record_every == 0 && !(k == nsteps && rem <= 1e-12))
      traj.samples.push_back(detail::make_sample(model, thetas, t, h, cfg.phi, kind));
  }
  if (rem > 1e-12) {
    h = detail::rk4_step(thetas, h, dir * rem, cfg.phi);
    h = Matrix(0.5 * (h + h.transpose()));
    step_checks(t_end);
  }
  traj.samples.push_back(detail::make_sample(model, thetas, t_end, h, cfg.phi, kind));

  const Vector& mu_end = traj.samples.back().ric_eigs;
  double dev = 0.0;
  for (int i = 0; i < mu_end.size(); ++i) dev = std::max(dev, std::abs(mu_end(i) - cfg.phi));
  traj.converged = dev <= cfg.tol;
  return traj;
}

/// mu(t) = mu0 p / (mu0 + e^{4pt} (p - mu0)), the eigenvalue evolution under
/// the normalized flow; p plays the role of Phi.
inline double closed_form_mu(double mu0, double p, double t) {
  if (!(mu0 > 0.0) || !(p > 0.0)) fail(ErrorCode::BadParams, "closed form needs mu0 > 0, p > 0");
  const double e = std::exp(4.0 * p * t);
  if (std::isinf(e)) {
    if (mu0 > p) fail(ErrorCode::PoleReached, "evaluation past the forward blowup time");
    return mu0 == p ? mu0 : 0.0;
  }
  const double den = mu0 + e * (p - mu0);
  if (!(den > 1e-300))
    fail(ErrorCode::PoleReached, "closed form has a pole before the requested time");
  return mu0 * p / den;
}

/// mu(t) = mu0 (2 Phi - alpha) / (mu0 + e^{4 Phi t} (2 Phi - alpha - mu0)),
/// the comparison-ODE solution; limit 2 Phi - alpha as t -> -inf.
inline double comparison_closed_form(double mu0, double alpha, double phi, double t) {
  if (!(2.0 * phi > alpha)) fail(ErrorCode::BadParams, "comparison needs 2 phi > alpha");
  if (!(mu0 > 0.0) || !(phi > 0.0))
    fail(ErrorCode::BadParams, "comparison needs mu0 > 0, phi > 0");
  const double lim = 2.0 * phi - alpha;
  const double e = std::exp(4.0 * phi * t);
  if (std::isinf(e)) {
    if (mu0 > lim) fail(ErrorCode::PoleReached, "evaluation past the forward blowup time");
    return mu0 == lim ? mu0 : 0.0;
  }
  const double den = mu0 + e * (lim - mu0);
  if (!(den > 1e-300))
    fail(ErrorCode::PoleReached, "comparison closed form has a pole before the requested time");
  return mu0 * lim / den;
}

/// Scalar data for the recurrence case: mu' = 4 mu (mu + psi1) - psi2.
struct ScalarOdeSpec {
  double psi1 = 0.0;
  double psi2 = 0.0;  ///< must be >= 0
  double alpha = 0.0;
  double mu0 = 1.0;
};

struct ScalarResult {
  std::vector<std::pair<double, double>> trajectory;  ///< (t, mu)
  double mu_plus = 0.0;
  double mu_minus = 0.0;
};

/// Backward RK4 run of the scalar recurrence ODE, plus its stationary points
/// mu± = (-psi1 ± sqrt(psi1^2 + psi2)) / 2.
inline ScalarResult scalar_case_i(const ScalarOdeSpec& spec, double t_end, double dt = 1e-3) {
  if (spec.psi2 < 0.0) fail(ErrorCode::BadParams, "psi2 must be nonnegative");
  if (!(t_end < 0.0)) fail(ErrorCode::BadParams, "the scalar suite integrates backward: t_end < 0");
  if (!(dt > 0.0) || dt > 1e-2) fail(ErrorCode::BadParams, "dt must lie in (0, 1e-2]");
  const double disc = std::sqrt(spec.psi1 * spec.psi1 + spec.psi2);
  ScalarResult out;
  out.mu_plus = 0.5 * (-spec.psi1 + disc);
  out.mu_minus = 0.5 * (-spec.psi1 - disc);

  auto f = [&](double mu) { return 4.0 * mu * (mu + spec.psi1) - spec.psi2; };
  double mu = spec.mu0, t = 0.0;
  const long nsteps = std::lround(std::abs(t_end) / dt);
  out.trajectory.emplace_back(t, mu);
  for (long k = 1; k <= nsteps; ++k) {
    const double h = -dt;
    const double k1 = f(mu);
    const double k2 = f(mu + 0.5 * h * k1);
    const double k3 = f(mu + 0.5 * h * k2);
    const double k4 = f(mu + h * k3);
    mu += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = -static_cast<double>(k) * dt;
    if (!std::isfinite(mu) || std::abs(mu) > 1e12)
      fail(ErrorCode::BlowupDetected,
           "scalar solution blew up backward near t = " + std::to_string(t) +
               " (mu(0) below the lower stationary point)");
    if (k % 10 == 0 || k == nsteps) out.trajectory.emplace_back(t, mu);
  }
  return out;
}

/// Analytic limit metric: diag sqrt(mu_i(0)/phi) in a G0-orthonormal
/// eigenframe of Ric^perp(0), returned as the horizontal block together with
/// the recomputed fixed-point residual |r_ghat - phi ghat|.
struct LimitMetric {
  Matrix h;
  double fixed_point_residual = 0.0;
};

inline LimitMetric limit_metric(const LieFoliationModel& model, double phi) {
  if (!(phi > 0.0)) fail(ErrorCode::BadParams, "phi must be positive");
  if (!model.horizontal_posdef())
    fail(ErrorCode::NotPositive, "limit metric needs a positive definite horizontal metric");
  const Matrix h0 = model.horizontal_block(model.metric());
  const auto thetas = detail::horizontal_thetas(model);
  const auto [mu, w] = g_selfadjoint_eigensystem(detail::ric_alg(thetas, h0), h0);
  if (!(mu.minCoeff() > 0.0))
    fail(ErrorCode::NotPositive, "Ric^perp(0) must be positive definite");
  Matrix d = Matrix::Zero(mu.size(), mu.size());
  for (int i = 0; i < mu.size(); ++i) d(i, i) = std::sqrt(mu(i) / phi);
  // w is h0-orthonormal, so w^{-1} = w^T h0 and ghat = h0 w d w^T h0
  LimitMetric lim;
  lim.h = h0 * w * d * w.transpose() * h0;
  lim.h = 0.5 * (lim.h + Matrix(lim.h.transpose()));
  const PartialRicci pr = partial_ricci(Geometry(model, model.assemble_metric(lim.h)));
  lim.fixed_point_residual = max_abs(Matrix(pr.r - phi * lim.h));
  return lim;
}

struct ConvergenceReport {
  double rate = 0.0;       ///< slope of log |Ric - phi id| vs t; expected 4 phi
  double fit_error = 0.0;  ///< RMS residual of the linear fit
  int n_samples = 0;
};

/// Least-squares exponential-rate fit over the samples whose deviation norm
/// sits inside (1e-12, 1e-2).
inline ConvergenceReport convergence_report(const FlowTrajectory& traj, double phi) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& s : traj.samples) {
    double dev = 0.0;
    for (int i = 0; i < s.ric_eigs.size(); ++i)
      dev = std::max(dev, std::abs(s.ric_eigs(i) - phi));
    if (dev > 1e-12 && dev < 1e-2) pts.emplace_back(s.t, std::log(dev));
  }
  if (pts.size() < 10)
    fail(ErrorCode::InsufficientSamples,
         "need at least 10 samples in the fit window, have " + std::to_string(pts.size()));
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (const auto& [t, y] : pts) {
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  const double n = static_cast<double>(pts.size());
  ConvergenceReport rep;
  rep.rate = (n * sty - st * sy) / (n * stt - st * st);
  const double b = (sy - rep.rate * st) / n;
  double ss = 0.0;
  for (const auto& [t, y] : pts) {
    const double r = y - (rep.rate * t + b);
    ss += r * r;
  }
  rep.fit_error = std::sqrt(ss / n);
  rep.n_samples = static_cast<int>(pts.size());
  return rep;
}

/// Attaches the fitted rate to the trajectory; leaves it unset when the fit
/// window is too thin (constant flows, short horizons).
inline void estimate_rate(FlowTrajectory& traj, double phi) {
  try {
    traj.rate_estimate = convergence_report(traj, phi).rate;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InsufficientSamples) throw;
  }
}

/// Full deformation-retraction verification: integrate, then classify the
/// E-Q-phi structure at t_end and at the analytic limit metric.
struct RetractReport {
  FlowTrajectory traj;
  Classification at_t_end;
  Classification at_limit;
  double q_identity_gap = 0.0;      ///< |Q_hat - id| at the limit
  double limit_normality = 0.0;
  double kind_residual = 0.0;       ///< EQ0p (p_contact) or dEta - F (others) at the limit
  double k_min = 0.0, k_max = 0.0;  ///< mixed sectional curvature spread at the limit
  double limit_fixed_point_residual = 0.0;
};

inline RetractReport retract_and_verify(const LieFoliationModel& model, const FlowConfig& cfg) {
  RetractReport rep;
  rep.traj = integrate_flow(model, cfg);
  estimate_rate(rep.traj, cfg.phi);
  if (!rep.traj.converged)
    fail(ErrorCode::NotConverged, "flow did not reach |Ric - phi id| <= tol by t_end");
  const StructureKind kind = cfg.kind.value_or(default_kind(model));

  const LieFoliationModel m_end = model.with_metric(rep.traj.samples.back().g);
  rep.at_t_end = classify(m_end, retracted_structure(m_end, kind));

  const LimitMetric lim = limit_metric(model, cfg.phi);
  rep.limit_fixed_point_residual = lim.fixed_point_residual;
  const LieFoliationModel m_hat = model.with_metric(model.assemble_metric(lim.h));
  const FramedStructure s_hat = retracted_structure(m_hat, kind);
  rep.at_limit = classify(m_hat, s_hat);
  rep.q_identity_gap = max_abs(Matrix(s_hat.Q - Matrix::Identity(model.dim(), model.dim())));
  rep.limit_normality = structure_normality(m_hat, s_hat);
  if (kind == StructureKind::p_contact) {
    rep.kind_residual = check_p_contact(m_hat, s_hat).residuals.at("EQ0p");
  } else {
    const Matrix f = two_form(m_hat.metric(), s_hat.phi());
    double r = 0.0;
    for (int i = 0; i < s_hat.p(); ++i)
      r = std::max(r, max_abs(Matrix(d_eta(m_hat, s_hat.etas[static_cast<size_t>(i)]) - f)));
    rep.kind_residual = r;
  }

  Geometry geom_hat(m_hat);
  bool first = true;
  for (int i = 0; i < model.p(); ++i)
    for (int a = 0; a < model.hdim(); ++a) {
      const double k = geom_hat.mixed_k(i, Vector::Unit(model.hdim(), a));
      if (first) {
        rep.k_min = rep.k_max = k;
        first = false;
      } else {
        rep.k_min = std::min(rep.k_min, k);
        rep.k_max = std::max(rep.k_max, k);
      }
    }
  return rep;
}

// ---- serialization ----

inline Json to_json(const FlowTrajectory& traj) {
  Json j;
  j["model"] = traj.model_name;
  j["phi"] = traj.phi;
  j["dt"] = traj.dt;
  j["converged"] = traj.converged;
  if (traj.rate_estimate)
    j["rate_estimate"] = *traj.rate_estimate;
  else
    j["rate_estimate"] = nullptr;
  Json samples = Json::array();
  for (const auto& s : traj.samples) {
    Json js;
    js["t"] = s.t;
    js["G"] = detail::flatten(s.g);
    Json eigs = Json::array();
    for (int i = 0; i < s.ric_eigs.size(); ++i) eigs.push_back(s.ric_eigs(i));
    js["ric_eigs"] = eigs;
    js["residuals"] = s.residuals;
    samples.push_back(js);
  }
  j["samples"] = samples;
  return j;
}

inline std::string format_g12(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string to_csv(const FlowTrajectory& traj) {
  std::ostringstream os;
  const int k = traj.samples.empty() ? 0 : static_cast<int>(traj.samples.front().ric_eigs.size());
  os << "t";
  for (int i = 1; i <= k; ++i) os << ",mu_" << i;
  os << ",res_ode,res_tsharp,res_commutator,res_compat\n";
  for (const auto& s : traj.samples) {
    os << format_g12(s.t);
    for (int i = 0; i < k; ++i) os << "," << format_g12(s.ric_eigs(i));
    os << "," << format_g12(s.residuals.at("ode")) << "," << format_g12(s.residuals.at("tsharp"))
       << "," << format_g12(s.residuals.at("commutator")) << ","
       << format_g12(s.residuals.at("compat")) << "\n";
  }
  return os.str();
}

}  // namespace gfol
