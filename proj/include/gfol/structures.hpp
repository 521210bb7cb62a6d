#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gfol/error.hpp"
#include "gfol/geometry.hpp"
#include "gfol/linalg.hpp"
#include "gfol/model.hpp"

namespace gfol {

enum class StructureKind { contact, p_contact, f_structure, para_phi };

inline const char* kind_name(StructureKind k) {
  switch (k) {
    case StructureKind::contact: return "contact";
    case StructureKind::p_contact: return "p_contact";
    case StructureKind::f_structure: return "f_structure";
    case StructureKind::para_phi: return "para_phi";
  }
  return "contact";
}

inline StructureKind kind_from_name(const std::string& s) {
  if (s == "contact") return StructureKind::contact;
  if (s == "p_contact") return StructureKind::p_contact;
  if (s == "f_structure") return StructureKind::f_structure;
  if (s == "para_phi") return StructureKind::para_phi;
  fail(ErrorCode::ParseError, "unknown structure kind '" + s + "'");
}

/// Levi-Civita symbol on three 0-based indices.
inline double eps3(int i, int j, int k) {
  if (i == j || j == k || i == k) return 0.0;
  return static_cast<double>((j - i) * (k - j) * (k - i)) /
         std::abs((j - i) * (k - j) * (k - i));
}

/// A framed metric structure over a model: one endomorphism phi (or f), or p
/// of them for p-contact structures, the Reeb slots xi_i, the covectors
/// eta^i, and the deformation tensor Q.
struct FramedStructure {
  StructureKind kind = StructureKind::contact;
  std::vector<Matrix> phis;   ///< N x N, columns = images of frame vectors
  std::vector<int> xis;       ///< global frame indices, a permutation of the vertical set
  std::vector<Vector> etas;   ///< coefficient rows, length N
  Matrix Q;                   ///< N x N

  const Matrix& phi(int i = 0) const { return phis[static_cast<size_t>(i)]; }
  int p() const { return static_cast<int>(xis.size()); }
};

/// Structure-check outcome: named residuals plus the 1e-10 pass verdict.
struct ResidualReport {
  std::map<std::string, double> residuals;
  bool pass = true;

  void put(const std::string& key, double value) {
    residuals[key] = value;
    if (!(value <= 1e-10)) pass = false;
  }
  double max() const {
    double m = 0.0;
    for (const auto& [k, v] : residuals) {
      (void)k;
      m = std::max(m, v);
    }
    return m;
  }
};

namespace detail {

inline void check_structure_shapes(const LieFoliationModel& model, const FramedStructure& s) {
  const int n = model.dim(), p = model.p();
  const size_t want_phis = s.kind == StructureKind::p_contact ? static_cast<size_t>(p) : 1u;
  if (s.kind == StructureKind::contact && p != 1)
    fail(ErrorCode::KindMismatch, "contact structures need exactly one vertical direction");
  if (s.kind == StructureKind::p_contact && p < 2)
    fail(ErrorCode::KindMismatch, "p-contact structures need p >= 2");
  if (s.phis.size() != want_phis)
    fail(ErrorCode::ValidationError, "wrong number of phi tensors for the kind");
  for (const auto& m : s.phis)
    if (m.rows() != n || m.cols() != n) fail(ErrorCode::ValidationError, "phi has wrong shape");
  if (static_cast<int>(s.xis.size()) != p || static_cast<int>(s.etas.size()) != p)
    fail(ErrorCode::ValidationError, "need one xi slot and one eta per vertical direction");
  std::vector<int> sorted = s.xis;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> vert = model.vertical();
  std::sort(vert.begin(), vert.end());
  if (sorted != vert)
    fail(ErrorCode::ValidationError, "xis must be a permutation of the model's vertical slots");
  for (const auto& e : s.etas)
    if (e.size() != n) fail(ErrorCode::ValidationError, "eta has wrong length");
  if (s.Q.rows() != n || s.Q.cols() != n) fail(ErrorCode::ValidationError, "Q has wrong shape");
  if (rank_of(s.Q) < n) fail(ErrorCode::SingularQ, "Q is singular");
}

inline Vector xi_vec(const LieFoliationModel& model, const FramedStructure& s, int i) {
  return Vector::Unit(model.dim(), s.xis[static_cast<size_t>(i)]);
}

/// eta^i(xi_j) - delta_ij, Q xi = xi, and the rank of phi restricted to D.
inline void basic_residuals(const LieFoliationModel& model, const FramedStructure& s,
                            ResidualReport& rep) {
  double eta_xi = 0.0, q_xi = 0.0;
  for (int i = 0; i < s.p(); ++i) {
    const Vector xi = xi_vec(model, s, i);
    q_xi = std::max(q_xi, max_abs(Vector(s.Q * xi - xi)));
    for (int j = 0; j < s.p(); ++j) {
      const double want = i == j ? 1.0 : 0.0;
      eta_xi = std::max(eta_xi, std::abs(s.etas[static_cast<size_t>(i)].dot(xi_vec(model, s, j)) - want));
    }
  }
  rep.put("eta_xi", eta_xi);
  rep.put("Q_xi", q_xi);
  Geometry geom(model);
  double rank_defect = 0.0;
  for (const auto& phi : s.phis)
    rank_defect = std::max(rank_defect,
                           std::abs(static_cast<double>(rank_of(geom.restrict_horizontal(phi)) -
                                                        model.hdim())));
  rep.put("rank", rank_defect);
}

}  // namespace detail

/// Axioms of a weak almost contact structure (p = 1): phi^2 = -Q + eta (x) xi
/// together with the derived identities phi xi = 0, eta o phi = 0, [Q, phi] = 0
/// and rank phi = dim D.
inline ResidualReport check_weak_almost_contact(const LieFoliationModel& model,
                                                const FramedStructure& s) {
  if (s.kind != StructureKind::contact)
    fail(ErrorCode::KindMismatch, "check_weak_almost_contact needs a contact-kind structure");
  detail::check_structure_shapes(model, s);
  ResidualReport rep;
  const Matrix& phi = s.phi();
  const Vector xi = detail::xi_vec(model, s, 0);
  const Vector& eta = s.etas[0];
  rep.put("EQ1", max_abs(Matrix(phi * phi + s.Q - xi * eta.transpose())));
  rep.put("phi_xi", max_abs(Vector(phi * xi)));
  rep.put("eta_phi", max_abs(Vector(phi.transpose() * eta)));
  rep.put("Q_phi_comm", max_abs(Matrix(s.Q * phi - phi * s.Q)));
  detail::basic_residuals(model, s, rep);
  return rep;
}

/// Metric compatibility for the structure's kind: the E-Q2 family, phi
/// g-skew, Q g-self-adjoint.
inline ResidualReport check_metric_compat(const LieFoliationModel& model,
                                          const FramedStructure& s) {
  detail::check_structure_shapes(model, s);
  const Matrix& g = model.metric();
  ResidualReport rep;
  Matrix eta_sum = Matrix::Zero(model.dim(), model.dim());
  for (const auto& e : s.etas) eta_sum += e * e.transpose();
  switch (s.kind) {
    case StructureKind::contact:
    case StructureKind::p_contact: {
      double eq2 = 0.0, skew = 0.0;
      for (int i = 0; i < static_cast<int>(s.phis.size()); ++i) {
        const Matrix& phi = s.phis[static_cast<size_t>(i)];
        const Vector& eta = s.etas[static_cast<size_t>(i)];
        eq2 = std::max(eq2, max_abs(Matrix(phi.transpose() * g * phi - g * s.Q +
                                           eta * eta.transpose())));
        skew = std::max(skew, skew_residual(phi, g));
      }
      rep.put("EQ2", eq2);
      rep.put("skew", skew);
      break;
    }
    case StructureKind::f_structure:
      rep.put("EQ2", max_abs(Matrix(s.phi().transpose() * g * s.phi() - g * s.Q + eta_sum)));
      rep.put("skew", skew_residual(s.phi(), g));
      break;
    case StructureKind::para_phi:
      rep.put("EQ2", max_abs(Matrix(s.phi().transpose() * g * s.phi() + g * s.Q - eta_sum)));
      rep.put("skew", skew_residual(s.phi(), g));
      break;
  }
  rep.put("Q_selfadjoint", selfadjoint_residual(s.Q, g));
  return rep;
}

/// Normality defect, kind-aware: per-pair for p-contact, the full
/// sum-corrected tensor otherwise, with the sign flipped for para.
inline double structure_normality(const LieFoliationModel& model, const FramedStructure& s) {
  std::vector<std::pair<Vector, Vector>> pairs;
  for (int i = 0; i < s.p(); ++i)
    pairs.emplace_back(detail::xi_vec(model, s, i), s.etas[static_cast<size_t>(i)]);
  switch (s.kind) {
    case StructureKind::contact:
      return normality_residual(model, s.phi(), pairs, +1.0);
    case StructureKind::p_contact: {
      // each (phi_i, xi_i, eta^i) is required to be normal on its own
      double r = 0.0;
      for (int i = 0; i < s.p(); ++i)
        r = std::max(r, normality_residual(model, s.phis[static_cast<size_t>(i)],
                                           {pairs[static_cast<size_t>(i)]}, +1.0));
      return r;
    }
    case StructureKind::f_structure:
      return normality_residual(model, s.phi(), pairs, +1.0);
    case StructureKind::para_phi:
      return normality_residual(model, s.phi(), pairs, -1.0);
  }
  return 0.0;
}

/// Contact metric condition on top of compatibility: deta = F.
inline ResidualReport check_contact_metric(const LieFoliationModel& model,
                                           const FramedStructure& s) {
  if (s.kind != StructureKind::contact)
    fail(ErrorCode::KindMismatch, "check_contact_metric needs a contact-kind structure");
  ResidualReport rep = check_metric_compat(model, s);
  const Matrix f = two_form(model.metric(), s.phi());
  rep.put("dEta_F", max_abs(Matrix(d_eta(model, s.etas[0]) - f)));
  rep.put("normality", structure_normality(model, s));
  return rep;
}

/// Weak almost p-contact axioms: the composition table
/// phi_i phi_j = -delta_ij Q + eta^j (x) xi_i + sum_k eps_ijk phi_k,
/// the derived actions on the xi's and eta's, and the basics.
inline ResidualReport check_p_contact(const LieFoliationModel& model, const FramedStructure& s) {
  if (s.kind != StructureKind::p_contact)
    fail(ErrorCode::KindMismatch, "check_p_contact needs a p_contact-kind structure");
  detail::check_structure_shapes(model, s);
  ResidualReport rep;
  const int p = s.p();
  double table = 0.0, phi_xi = 0.0, eta_phi = 0.0, comm = 0.0;
  for (int i = 0; i < p; ++i) {
    const Matrix& pi = s.phis[static_cast<size_t>(i)];
    comm = std::max(comm, max_abs(Matrix(s.Q * pi - pi * s.Q)));
    for (int j = 0; j < p; ++j) {
      const Matrix& pj = s.phis[static_cast<size_t>(j)];
      Matrix want = detail::xi_vec(model, s, i) * s.etas[static_cast<size_t>(j)].transpose();
      if (i == j) want -= s.Q;
      for (int k = 0; k < p; ++k) {
        const double e = eps3(i, j, k);
        if (e != 0.0) want += e * s.phis[static_cast<size_t>(k)];
      }
      table = std::max(table, max_abs(Matrix(pi * pj - want)));

      Vector xi_want = Vector::Zero(model.dim());
      Vector eta_want = Vector::Zero(model.dim());
      for (int k = 0; k < p; ++k) {
        const double e = eps3(i, j, k);
        if (e != 0.0) {
          xi_want += e * detail::xi_vec(model, s, k);
          eta_want += eps3(i, k, j) * s.etas[static_cast<size_t>(k)];
        }
      }
      phi_xi = std::max(phi_xi, max_abs(Vector(pi * detail::xi_vec(model, s, j) - xi_want)));
      // well-typed reading of the eta-composition rule: eta^j o phi_i = sum_k eps_ikj eta^k
      eta_phi = std::max(eta_phi,
                         max_abs(Vector(pi.transpose() * s.etas[static_cast<size_t>(j)] - eta_want)));
    }
  }
  rep.put("EQ0p", table);
  rep.put("phi_xi", phi_xi);
  rep.put("eta_phi", eta_phi);
  rep.put("Q_phi_comm", comm);
  detail::basic_residuals(model, s, rep);
  const ResidualReport mc = check_metric_compat(model, s);
  for (const auto& [k, v] : mc.residuals) rep.put(k, v);
  double deta_f = 0.0;
  for (int i = 0; i < p; ++i) {
    const Matrix f = two_form(model.metric(), s.phis[static_cast<size_t>(i)]);
    deta_f = std::max(deta_f, max_abs(Matrix(d_eta(model, s.etas[static_cast<size_t>(i)]) - f)));
  }
  rep.put("dEta_F", deta_f);
  rep.put("normality", structure_normality(model, s));
  return rep;
}

namespace detail {

/// max over frame triples of |sum_cyc F([X,Y],Z)|; vanishes iff dF = 0.
inline double three_form_residual(const LieFoliationModel& model, const Matrix& f) {
  const int n = model.dim();
  double r = 0.0;
  auto fval = [&](const Vector& z, int k) { return (z.transpose() * f)(k); };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        const double s = fval(model.bracket(i, j), k) + fval(model.bracket(j, k), i) +
                         fval(model.bracket(k, i), j);
        r = std::max(r, std::abs(s));
      }
  return r;
}

}  // namespace detail

/// Weak f-structure axioms f^3 + fQ = 0, f^2 = -Q + sum eta^i (x) xi_i, the
/// basics, metric compatibility, and the K/C/S subclass residuals.
inline ResidualReport check_f_structure(const LieFoliationModel& model, const FramedStructure& s) {
  if (s.kind != StructureKind::f_structure)
    fail(ErrorCode::KindMismatch, "check_f_structure needs an f_structure-kind structure");
  detail::check_structure_shapes(model, s);
  ResidualReport rep;
  const Matrix& f = s.phi();
  Matrix xi_eta = Matrix::Zero(model.dim(), model.dim());
  double phi_xi = 0.0, eta_phi = 0.0;
  for (int i = 0; i < s.p(); ++i) {
    xi_eta += detail::xi_vec(model, s, i) * s.etas[static_cast<size_t>(i)].transpose();
    phi_xi = std::max(phi_xi, max_abs(Vector(f * detail::xi_vec(model, s, i))));
    eta_phi = std::max(eta_phi, max_abs(Vector(f.transpose() * s.etas[static_cast<size_t>(i)])));
  }
  rep.put("EfQ1", max_abs(Matrix(f * f * f + f * s.Q)));
  rep.put("EfQ2", max_abs(Matrix(f * f + s.Q - xi_eta)));
  rep.put("phi_xi", phi_xi);
  rep.put("eta_phi", eta_phi);
  rep.put("Q_phi_comm", max_abs(Matrix(s.Q * f - f * s.Q)));
  detail::basic_residuals(model, s, rep);
  const ResidualReport mc = check_metric_compat(model, s);
  for (const auto& [k, v] : mc.residuals) rep.put(k, v);

  const Matrix fform = two_form(model.metric(), f);
  double deta = 0.0, deta_f = 0.0;
  for (int i = 0; i < s.p(); ++i) {
    const Matrix d = d_eta(model, s.etas[static_cast<size_t>(i)]);
    deta = std::max(deta, max_abs(d));
    deta_f = std::max(deta_f, max_abs(Matrix(d - fform)));
  }
  rep.residuals["dEta"] = deta;      // subclass flags, not pass/fail axioms
  rep.residuals["dEta_F"] = deta_f;
  rep.residuals["dF"] = detail::three_form_residual(model, fform);
  rep.residuals["normality"] = structure_normality(model, s);
  return rep;
}

/// Weak almost para-phi axioms phi^3 - phi Q = 0, phi^2 = Q - sum eta (x) xi,
/// neutral-metric compatibility, and the para-S residuals.
inline ResidualReport check_para(const LieFoliationModel& model, const FramedStructure& s) {
  if (s.kind != StructureKind::para_phi)
    fail(ErrorCode::KindMismatch, "check_para needs a para_phi-kind structure");
  detail::check_structure_shapes(model, s);
  ResidualReport rep;
  const Matrix& phi = s.phi();
  Matrix xi_eta = Matrix::Zero(model.dim(), model.dim());
  double phi_xi = 0.0, eta_phi = 0.0;
  for (int i = 0; i < s.p(); ++i) {
    xi_eta += detail::xi_vec(model, s, i) * s.etas[static_cast<size_t>(i)].transpose();
    phi_xi = std::max(phi_xi, max_abs(Vector(phi * detail::xi_vec(model, s, i))));
    eta_phi = std::max(eta_phi, max_abs(Vector(phi.transpose() * s.etas[static_cast<size_t>(i)])));
  }
  rep.put("EpQ1", max_abs(Matrix(phi * phi * phi - phi * s.Q)));
  rep.put("EpQ2", max_abs(Matrix(phi * phi - s.Q + xi_eta)));
  rep.put("phi_xi", phi_xi);
  rep.put("eta_phi", eta_phi);
  rep.put("Q_phi_comm", max_abs(Matrix(s.Q * phi - phi * s.Q)));
  detail::basic_residuals(model, s, rep);
  const ResidualReport mc = check_metric_compat(model, s);
  for (const auto& [k, v] : mc.residuals) rep.put(k, v);
  const Matrix fform = two_form(model.metric(), phi);
  double deta_f = 0.0;
  for (int i = 0; i < s.p(); ++i)
    deta_f = std::max(deta_f,
                      max_abs(Matrix(d_eta(model, s.etas[static_cast<size_t>(i)]) - fform)));
  rep.residuals["dEta_F"] = deta_f;
  rep.residuals["normality"] = structure_normality(model, s);
  return rep;
}

/// Commuting-deformation construction: phi~ = phi + phi', with phi' vanishing
/// on the vertical distribution and commuting with phi; Q is corrected so the
/// structure axiom holds identically.
inline FramedStructure perturb_structure(const LieFoliationModel& model, const FramedStructure& s,
                                         const Matrix& phi_prime) {
  if (s.kind == StructureKind::p_contact)
    fail(ErrorCode::KindMismatch, "perturb_structure works on single-phi structures");
  detail::check_structure_shapes(model, s);
  const Matrix& phi = s.phi();
  if (max_abs(Matrix(phi * phi_prime - phi_prime * phi)) > 1e-12)
    fail(ErrorCode::NonCommuting, "phi' must commute with phi");
  for (int i = 0; i < s.p(); ++i) {
    if (max_abs(Vector(phi_prime * detail::xi_vec(model, s, i))) > 1e-12)
      fail(ErrorCode::ValidationError, "phi' must vanish on the vertical distribution");
    if (max_abs(Vector(phi_prime.transpose() * s.etas[static_cast<size_t>(i)])) > 1e-12)
      fail(ErrorCode::ValidationError, "phi' must preserve the horizontal distribution");
  }
  FramedStructure out = s;
  out.phis[0] = phi + phi_prime;
  const double sign = s.kind == StructureKind::para_phi ? -1.0 : 1.0;
  out.Q = s.Q - sign * (phi * phi_prime + phi_prime * phi + phi_prime * phi_prime);
  if (rank_of(out.Q) < model.dim()) fail(ErrorCode::SingularQ, "perturbation makes Q singular");
  return out;
}

/// Metric in which the columns of `frame` are orthonormal; requires phi to be
/// antisymmetric in that frame.
inline Matrix compatible_metric_from_frame(const Matrix& phi, const Matrix& frame) {
  if (frame.rows() != frame.cols() || frame.rows() != phi.rows())
    fail(ErrorCode::BadParams, "frame must be square and match phi");
  Eigen::FullPivLU<Matrix> lu(frame);
  if (!lu.isInvertible()) fail(ErrorCode::BadParams, "frame matrix is singular");
  const Matrix sinv = lu.inverse();
  const Matrix in_frame = sinv * phi * frame;
  const double skew = max_abs(Matrix(in_frame + in_frame.transpose()));
  if (skew > 1e-10)
    fail(ErrorCode::NotSkewInFrame, "phi has a symmetric part in the given frame");
  return sinv.transpose() * sinv;
}

// ---- canonical structures and (de)serialization ----

namespace detail {

inline std::string family_of(const std::string& name) {
  return name.substr(0, name.find(':'));
}

inline int vslot(const LieFoliationModel& model, int global_index) {
  for (int i = 0; i < model.p(); ++i)
    if (model.vertical()[i] == global_index) return i;
  fail(ErrorCode::ValidationError, "index is not a vertical slot");
}

}  // namespace detail

/// The canonical weak structure carried by a model: phi_i = T#_{xi_i} on D
/// (plus the eps-rotation on the vertical block for p-contact), eta^i the
/// metric duals, Q from the kind's square identity.
inline FramedStructure canonical_structure(const LieFoliationModel& model, StructureKind kind) {
  const int n = model.dim(), p = model.p();
  if (kind == StructureKind::contact && p != 1)
    fail(ErrorCode::KindMismatch, "contact structures need p = 1");
  if (kind == StructureKind::p_contact && p < 2)
    fail(ErrorCode::KindMismatch, "p_contact structures need p >= 2");
  Geometry geom(model);
  const FoliationTensors ft = foliation_tensors(geom);
  FramedStructure s;
  s.kind = kind;
  s.xis = model.vertical();
  for (int i = 0; i < p; ++i) s.etas.push_back(Vector::Unit(n, model.vertical()[i]));

  const int nphi = kind == StructureKind::p_contact ? p : 1;
  for (int i = 0; i < nphi; ++i) {
    Matrix phi = geom.embed_horizontal(ft.tsharp[i]);
    if (kind == StructureKind::p_contact)
      for (int j = 0; j < p; ++j)
        for (int k = 0; k < p; ++k) {
          const double e = eps3(i, j, k);
          if (e != 0.0) phi(model.vertical()[k], model.vertical()[j]) = e;
        }
    s.phis.push_back(phi);
  }

  const double sign = kind == StructureKind::para_phi ? 1.0 : -1.0;
  Matrix q_h;
  if (kind == StructureKind::p_contact) {
    q_h = Matrix::Zero(model.hdim(), model.hdim());
    for (int i = 0; i < p; ++i) q_h -= ft.tsharp[i] * ft.tsharp[i];
    q_h /= static_cast<double>(p);  // (1/p) Ric^perp
  } else {
    q_h = sign * ft.tsharp[0] * ft.tsharp[0];
  }
  s.Q = geom.embed_horizontal(q_h);
  for (int v : model.vertical()) s.Q(v, v) = 1.0;
  return s;
}

inline StructureKind default_kind(const LieFoliationModel& model) {
  const std::string fam = detail::family_of(model.name());
  if (fam == "quat_heisenberg") return StructureKind::p_contact;
  if (fam == "s_model") return StructureKind::f_structure;
  if (fam == "para_model") return StructureKind::para_phi;
  if (fam == "heisenberg" || fam == "su2") return StructureKind::contact;
  return model.p() == 1 ? StructureKind::contact : StructureKind::f_structure;
}

inline Json structure_to_json(const FramedStructure& s) {
  Json j;
  j["kind"] = kind_name(s.kind);
  j["xis"] = s.xis;
  Json phis = Json::array();
  for (const auto& m : s.phis) phis.push_back(detail::flatten(m));
  j["phis"] = phis;
  Json etas = Json::array();
  for (const auto& e : s.etas) {
    Json row = Json::array();
    for (int i = 0; i < e.size(); ++i) row.push_back(e(i));
    etas.push_back(row);
  }
  j["etas"] = etas;
  j["Q"] = detail::flatten(s.Q);
  return j;
}

/// Parses an embedded structure block.  Keys: kind, phis (or phi), xis, and
/// optional etas and Q (defaulted from the metric duals and the kind's square
/// identity).
inline FramedStructure structure_from_json(const LieFoliationModel& model, const Json& j) {
  if (!j.is_object()) fail(ErrorCode::ParseError, "'structure' must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "kind" && key != "phis" && key != "phi" && key != "xis" && key != "etas" &&
        key != "Q")
      fail(ErrorCode::ParseError, "unknown structure key '" + key + "'");
  }
  if (!j.contains("kind") || !j["kind"].is_string())
    fail(ErrorCode::ParseError, "structure needs a 'kind' string");
  FramedStructure s;
  s.kind = kind_from_name(j["kind"].get<std::string>());
  const int n = model.dim();

  auto parse_matrix = [&](const Json& arr, const char* what) {
    if (!arr.is_array() || static_cast<int>(arr.size()) != n * n)
      fail(ErrorCode::ParseError, std::string(what) + " must be a row-major array of dim*dim numbers");
    Matrix m(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (!arr[a * n + b].is_number())
          fail(ErrorCode::ParseError, std::string(what) + " entries must be numbers");
        m(a, b) = arr[a * n + b].get<double>();
      }
    return m;
  };

  if (j.contains("phi") == j.contains("phis"))
    fail(ErrorCode::ParseError, "structure needs exactly one of 'phi' or 'phis'");
  if (j.contains("phi")) {
    s.phis.push_back(parse_matrix(j["phi"], "'phi'"));
  } else {
    if (!j["phis"].is_array()) fail(ErrorCode::ParseError, "'phis' must be an array");
    for (const auto& m : j["phis"]) s.phis.push_back(parse_matrix(m, "'phis' entry"));
  }

  if (j.contains("xis")) {
    if (!j["xis"].is_array()) fail(ErrorCode::ParseError, "'xis' must be an array");
    for (const auto& x : j["xis"]) {
      if (!x.is_number_integer()) fail(ErrorCode::ParseError, "'xis' entries must be integers");
      s.xis.push_back(x.get<int>());
    }
  } else {
    s.xis = model.vertical();
  }

  if (j.contains("etas")) {
    if (!j["etas"].is_array()) fail(ErrorCode::ParseError, "'etas' must be an array");
    for (const auto& row : j["etas"]) {
      if (!row.is_array() || static_cast<int>(row.size()) != n)
        fail(ErrorCode::ParseError, "'etas' rows must have dim numbers");
      Vector e(n);
      for (int i = 0; i < n; ++i) {
        if (!row[i].is_number()) fail(ErrorCode::ParseError, "'etas' entries must be numbers");
        e(i) = row[i].get<double>();
      }
      s.etas.push_back(e);
    }
  } else {
    for (int x : s.xis) s.etas.push_back(Vector::Unit(n, x));
  }

  if (j.contains("Q")) {
    s.Q = parse_matrix(j["Q"], "'Q'");
  } else {
    const double sign = s.kind == StructureKind::para_phi ? 1.0 : -1.0;
    Matrix q = Matrix::Zero(n, n);
    if (s.kind == StructureKind::p_contact) {
      for (const auto& phi : s.phis) q += sign * phi * phi;
      q /= static_cast<double>(s.phis.size());
      // drop the vertical contribution of the eps-action before restoring id
      for (int v : model.vertical())
        for (int w = 0; w < n; ++w) {
          q(v, w) = 0.0;
          q(w, v) = 0.0;
        }
    } else {
      q = sign * s.phi() * s.phi();
    }
    for (int v : model.vertical()) q(v, v) = 1.0;
    s.Q = q;
  }
  detail::check_structure_shapes(model, s);
  return s;
}

/// The structure a model carries: the embedded block when the file has one,
/// the canonical structure of the requested (or default) kind otherwise.
inline FramedStructure default_structure(const LieFoliationModel& model,
                                         std::optional<StructureKind> kind = std::nullopt) {
  if (!model.structure_spec().is_null()) {
    FramedStructure s = structure_from_json(model, model.structure_spec());
    if (kind && *kind != s.kind)
      fail(ErrorCode::KindMismatch, "requested kind differs from the embedded structure");
    return s;
  }
  return canonical_structure(model, kind.value_or(default_kind(model)));
}

/// Dispatches to the kind's full check suite.
inline ResidualReport check_structure(const LieFoliationModel& model, const FramedStructure& s) {
  switch (s.kind) {
    case StructureKind::contact: {
      ResidualReport rep = check_weak_almost_contact(model, s);
      const ResidualReport cm = check_contact_metric(model, s);
      for (const auto& [k, v] : cm.residuals)
        if (k == "normality" || k == "dEta_F")
          rep.residuals[k] = v;  // classification data, not axiom failures
        else
          rep.put(k, v);
      return rep;
    }
    case StructureKind::p_contact: {
      ResidualReport rep = check_p_contact(model, s);
      // dEta_F and normality grade the label, not validity
      ResidualReport graded;
      for (const auto& [k, v] : rep.residuals)
        if (k == "dEta_F" || k == "normality")
          graded.residuals[k] = v;
        else
          graded.put(k, v);
      return graded;
    }
    case StructureKind::f_structure:
      return check_f_structure(model, s);
    case StructureKind::para_phi: {
      ResidualReport rep = check_para(model, s);
      ResidualReport graded;
      for (const auto& [k, v] : rep.residuals)
        if (k == "dEta_F" || k == "normality")
          graded.residuals[k] = v;
        else
          graded.put(k, v);
      return graded;
    }
  }
  fail(ErrorCode::ValidationError, "unreachable");
}

// ---- classification ----

struct Classification {
  std::string label;
  std::string slug;
  bool classical = false;
  double normality = 0.0;
  std::map<std::string, double> residuals;
};

namespace detail {

inline std::string slugify(std::string label) {
  // map the script class letters and phi to ascii before slugging
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"\xF0\x9D\x92\xAE", "S"}, {"\xF0\x9D\x92\x9E", "C"}, {"\xF0\x9D\x92\xA6", "K"},
      {"\xCF\x86", "phi"}};
  for (const auto& [from, to] : subs) {
    size_t pos;
    while ((pos = label.find(from)) != std::string::npos) label.replace(pos, from.size(), to);
  }
  std::string out;
  bool dash = false;
  for (char ch : label) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
      dash = false;
    } else if (!out.empty() && !dash) {
      out.push_back('-');
      dash = true;
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out;
}

inline double q_identity_gap(const FramedStructure& s, int dim) {
  return max_abs(Matrix(s.Q - Matrix::Identity(dim, dim)));
}

inline double group_max(const std::map<std::string, double>& residuals,
                        std::initializer_list<const char*> keys) {
  double m = 0.0;
  for (const char* k : keys) {
    auto it = residuals.find(k);
    if (it != residuals.end()) m = std::max(m, it->second);
  }
  return m;
}

}  // namespace detail

/// Greatest-specificity label for the structure over its model, with the
/// classical flag (Q = id) and the full residual table.
inline Classification classify(const LieFoliationModel& model, const FramedStructure& s) {
  constexpr double thr = 1e-10;
  Classification cls;
  ResidualReport rep = check_structure(model, s);
  cls.residuals = rep.residuals;
  cls.normality = rep.residuals.count("normality") ? rep.residuals.at("normality") : 0.0;
  cls.classical = detail::q_identity_gap(s, model.dim()) <= thr;
  const double deta_f = rep.residuals.count("dEta_F") ? rep.residuals.at("dEta_F") : 1.0;
  const bool normal = cls.normality <= thr;
  const std::string weak = cls.classical ? "" : "weak ";
  const std::string ps = std::to_string(s.p());

  const double ax_res = detail::group_max(
      rep.residuals, {"EQ1", "EQ0p", "EfQ1", "EfQ2", "EpQ1", "EpQ2", "phi_xi", "eta_phi",
                      "Q_phi_comm", "eta_xi", "Q_xi", "rank"});
  const double mc_res = detail::group_max(rep.residuals, {"EQ2", "skew", "Q_selfadjoint"});
  const bool axiom_pass = ax_res <= thr;
  const bool metric_pass = mc_res <= thr;

  switch (s.kind) {
    case StructureKind::contact: {
      if (!axiom_pass)
        cls.label = "unclassified";
      else if (!metric_pass)
        cls.label = "weak almost contact";
      else if (deta_f > thr)
        cls.label = cls.classical ? "almost contact metric (classical)" : "weak almost contact metric";
      else if (!normal)
        cls.label = (cls.classical ? "contact metric (classical)" : "weak contact metric") +
                    std::string(", non-normal");
      else
        cls.label = cls.classical ? "Sasakian (classical)" : "weak Sasakian";
      break;
    }
    case StructureKind::p_contact: {
      if (!axiom_pass)
        cls.label = "unclassified";
      else if (!metric_pass)
        cls.label = "weak almost " + ps + "-contact";
      else if (deta_f > thr)
        cls.label = cls.classical ? "almost " + ps + "-contact metric (classical)"
                                  : "weak almost " + ps + "-contact metric";
      else if (!normal)
        cls.label = (cls.classical ? ps + "-contact metric (classical)"
                                   : "weak " + ps + "-contact metric") +
                    std::string(", non-normal");
      else
        cls.label = cls.classical ? ps + "-Sasakian (classical)" : "weak " + ps + "-Sasakian";
      break;
    }
    case StructureKind::f_structure: {
      const double deta = rep.residuals.at("dEta");
      const double df = rep.residuals.at("dF");
      if (!axiom_pass) {
        cls.label = "unclassified";
      } else if (!metric_pass) {
        cls.label = "weak f-structure";
      } else if (deta_f <= thr) {
        if (normal)
          cls.label = cls.classical ? "metric \xF0\x9D\x92\xAE-structure (classical)"
                                    : "weak \xF0\x9D\x92\xAE-structure";
        else
          cls.label = weak + std::string("almost \xF0\x9D\x92\xAE-structure");
      } else if (deta <= thr) {
        if (normal && df <= thr)
          cls.label = cls.classical ? "\xF0\x9D\x92\x9E-structure (classical)"
                                    : "weak \xF0\x9D\x92\x9E-structure";
        else
          cls.label = weak + std::string("almost \xF0\x9D\x92\x9E-structure");
      } else if (normal && df <= thr) {
        cls.label = cls.classical ? "\xF0\x9D\x92\xA6-structure (classical)"
                                  : "weak \xF0\x9D\x92\xA6-structure";
      } else {
        cls.label = cls.classical ? "metric f-structure (classical)" : "metric weak f-structure";
      }
      break;
    }
    case StructureKind::para_phi: {
      if (!axiom_pass)
        cls.label = "unclassified";
      else if (!metric_pass)
        cls.label = "weak almost para-\xCF\x86";
      else if (deta_f > thr)
        cls.label = cls.classical ? "para-\xCF\x86 metric structure (classical)"
                                  : "metric weak para-\xCF\x86 structure";
      else if (!normal)
        cls.label = (cls.classical ? "para-\xCF\x86 metric structure (classical)"
                                   : "metric weak para-\xCF\x86 structure") +
                    std::string(", non-normal");
      else
        cls.label = cls.classical ? "para-\xF0\x9D\x92\xAE (classical)"
                                  : "weak para-\xF0\x9D\x92\xAE";
      break;
    }
  }
  cls.slug = detail::slugify(cls.label);
  return cls;
}

inline Json to_json(const Classification& cls) {
  Json j;
  j["label"] = cls.label;
  j["slug"] = cls.slug;
  j["classical"] = cls.classical;
  j["normality"] = cls.normality;
  j["residuals"] = cls.residuals;
  return j;
}

}  // namespace gfol
