#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "gfol/error.hpp"
#include "gfol/linalg.hpp"
#include "gfol/model.hpp"

namespace gfol {

/// Levi-Civita data of (model, g) in the invariant frame, with the curvature
/// table.  Conventions:
///   gamma[i] has column j = frame coordinates of nabla_{E_i} E_j,
///   R(X,Y) = nabla_X nabla_Y - nabla_Y nabla_X - nabla_{[X,Y]},
///   r4(i,j,k,l) = g(R(E_i,E_j) E_k, E_l).
class Geometry {
public:
  explicit Geometry(const LieFoliationModel& model) : Geometry(model, model.metric()) {}

  Geometry(const LieFoliationModel& model, Matrix g) : model_(model), g_(std::move(g)) {
    const int n = model_.dim();
    if (g_.rows() != n || g_.cols() != n) fail(ErrorCode::SingularMetric, "metric has wrong shape");
    Eigen::FullPivLU<Matrix> lu(g_);
    if (!lu.isInvertible()) fail(ErrorCode::SingularMetric, "metric is singular");
    ginv_ = lu.inverse();

    // Koszul formula; derivative terms vanish on invariant fields:
    // 2 g(nabla_{E_i} E_j, E_k) = g([E_i,E_j],E_k) - g([E_j,E_k],E_i) + g([E_k,E_i],E_j).
    std::vector<Matrix> b(n, Matrix::Zero(n, n));  // b[i](j,k) = g([E_i,E_j], E_k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Vector br = Vector::Zero(n);
        for (int k = 0; k < n; ++k) br(k) = model_.c(k)(i, j);
        b[i].row(j) = (g_ * br).transpose();
      }
    gamma_.assign(n, Matrix::Zero(n, n));
    for (int i = 0; i < n; ++i) {
      Matrix rhs(n, n);  // (k,j)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) rhs(k, j) = 0.5 * (b[i](j, k) - b[j](k, i) + b[k](i, j));
      gamma_[i] = ginv_ * rhs;
    }

    curv_.assign(n, std::vector<Matrix>(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Matrix r = gamma_[i] * gamma_[j] - gamma_[j] * gamma_[i];
        for (int m = 0; m < n; ++m) {
          const double cm = model_.c(m)(i, j);
          if (cm != 0.0) r -= cm * gamma_[m];
        }
        curv_[i][j] = r;
      }
  }

  const LieFoliationModel& model() const { return model_; }
  const Matrix& g() const { return g_; }
  const Matrix& ginv() const { return ginv_; }
  const std::vector<Matrix>& gamma() const { return gamma_; }
  const Matrix& curv_op(int i, int j) const { return curv_[i][j]; }

  double r4(int i, int j, int k, int l) const {
    return (g_ * curv_[i][j].col(k)).dot(Vector::Unit(model_.dim(), l));
  }

  /// R(x,y) for coordinate vectors, by bilinearity.
  Matrix curv_op(const Vector& x, const Vector& y) const {
    const int n = model_.dim();
    Matrix r = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      if (x(i) == 0.0) continue;
      for (int j = 0; j < n; ++j)
        if (y(j) != 0.0) r += x(i) * y(j) * curv_[i][j];
    }
    return r;
  }

  /// Sectional curvature of span(x, y).
  double sectional(const Vector& x, const Vector& y) const {
    const double num = (g_ * (curv_op(x, y) * y)).dot(x);
    const double gxx = x.dot(g_ * x), gyy = y.dot(g_ * y), gxy = x.dot(g_ * y);
    const double den = gxx * gyy - gxy * gxy;
    if (std::abs(den) < 1e-14) fail(ErrorCode::BadParams, "degenerate plane in sectional curvature");
    return num / den;
  }

  /// Mixed sectional curvature K(xi_i, x) for a horizontal coordinate vector x.
  double mixed_k(int i, const Vector& x_horizontal) const {
    Vector x = Vector::Zero(model_.dim());
    for (int a = 0; a < model_.hdim(); ++a) x(model_.horizontal()[a]) = x_horizontal(a);
    return sectional(Vector::Unit(model_.dim(), model_.vertical()[i]), x);
  }

  Matrix restrict_horizontal(const Matrix& full) const {
    const auto& h = model_.horizontal();
    const int m = model_.hdim();
    Matrix r(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) r(a, b) = full(h[a], h[b]);
    return r;
  }

  Matrix embed_horizontal(const Matrix& op) const {
    const auto& h = model_.horizontal();
    const int m = model_.hdim();
    Matrix r = Matrix::Zero(model_.dim(), model_.dim());
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) r(h[a], h[b]) = op(a, b);
    return r;
  }

private:
  const LieFoliationModel& model_;
  Matrix g_;
  Matrix ginv_;
  std::vector<Matrix> gamma_;
  std::vector<std::vector<Matrix>> curv_;
};

inline std::vector<Matrix> levi_civita(const LieFoliationModel& m) { return Geometry(m).gamma(); }
inline std::vector<Matrix> levi_civita(const LieFoliationModel& m, const Matrix& g) {
  return Geometry(m, g).gamma();
}

/// Second fundamental form, integrability tensor and their adjoints, all on
/// horizontal positions; one matrix per vertical direction.
struct FoliationTensors {
  std::vector<Matrix> h;       ///< g(h(E_a,E_b), xi_i), symmetric
  std::vector<Matrix> t;       ///< g(T(E_a,E_b), xi_i), antisymmetric
  std::vector<Matrix> a;       ///< A_{xi_i}
  std::vector<Matrix> tsharp;  ///< T#_{xi_i}
  std::vector<Matrix> c;       ///< C_{xi_i} X = -(nabla_X xi_i)^perp
};

inline FoliationTensors foliation_tensors(const Geometry& geom) {
  const auto& model = geom.model();
  const int m = model.hdim(), p = model.p();
  const auto& hor = model.horizontal();
  const Matrix hb = model.horizontal_block(geom.g());
  const Matrix hinv = hb.fullPivLu().inverse();
  FoliationTensors ft;
  ft.h.resize(p);
  ft.t.resize(p);
  ft.a.resize(p);
  ft.tsharp.resize(p);
  ft.c.resize(p);
  for (int i = 0; i < p; ++i) {
    const int vi = model.vertical()[i];
    Matrix hi(m, m), ci(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        // vertical metric block is the identity, so vertical coordinates are
        // already g-components
        hi(a, b) = 0.5 * (geom.gamma()[hor[a]](vi, hor[b]) + geom.gamma()[hor[b]](vi, hor[a]));
        ci(b, a) = -geom.gamma()[hor[a]](hor[b], vi);
      }
    const Matrix theta = model.theta(i);
    ft.h[i] = hi;
    ft.t[i] = theta;
    ft.a[i] = hinv * hi;
    ft.tsharp[i] = hinv * theta.transpose();
    ft.c[i] = ci;
  }
  return ft;
}

/// Partial Ricci data on the horizontal distribution: the (0,2) form r_g and
/// its g-adjoint Ric^perp, oriented so that Ric^perp = -sum_i (T#_i)^2 is
/// nonnegative for Riemannian metrics (positive on su2).
struct PartialRicci {
  Matrix r;    ///< r_g(E_a, E_b)
  Matrix ric;  ///< Ric^perp as an operator on D
};

/// Curvature route: r_g(X,Y) = sum_i g(R(X, xi_i) xi_i, Y) on D.
inline PartialRicci partial_ricci(const Geometry& geom) {
  const auto& model = geom.model();
  const int m = model.hdim();
  const auto& hor = model.horizontal();
  Matrix r = Matrix::Zero(m, m);
  for (int i = 0; i < model.p(); ++i) {
    const int vi = model.vertical()[i];
    for (int a = 0; a < m; ++a) {
      const Vector col = geom.g() * geom.curv_op(hor[a], vi).col(vi);
      for (int b = 0; b < m; ++b) r(a, b) += col(hor[b]);
    }
  }
  const Matrix hb = model.horizontal_block(geom.g());
  return {r, hb.fullPivLu().solve(r)};
}

/// Algebraic route: Ric^perp = -sum_i (T#_{xi_i})^2, with T#_i = H^{-1} Theta_i^T.
inline PartialRicci partial_ricci_algebraic(const LieFoliationModel& model, const Matrix& g) {
  const Matrix hb = model.horizontal_block(g);
  const Matrix hinv = hb.fullPivLu().inverse();
  const int m = model.hdim();
  Matrix ric = Matrix::Zero(m, m);
  for (int i = 0; i < model.p(); ++i) {
    const Matrix ts = hinv * model.theta(i).transpose();
    ric -= ts * ts;
  }
  return {hb * ric, ric};
}

inline PartialRicci partial_ricci_algebraic(const LieFoliationModel& model) {
  return partial_ricci_algebraic(model, model.metric());
}

/// Jacobi-type operator X -> (R(X, xi_i) xi_j)^perp on horizontal positions.
inline Matrix mixed_jacobi(const Geometry& geom, int i, int j) {
  const auto& model = geom.model();
  const int m = model.hdim();
  const auto& hor = model.horizontal();
  const int vi = model.vertical()[i], vj = model.vertical()[j];
  Matrix out(m, m);
  for (int a = 0; a < m; ++a) {
    const Vector col = geom.curv_op(hor[a], vi).col(vj);
    for (int b = 0; b < m; ++b) out(b, a) = col(hor[b]);
  }
  return out;
}

/// Right-hand side of the mixed curvature identity:
/// (nabla_{xi_i} T#)(xi_j, .) - T#_{xi_j} T#_{xi_i}.
inline Matrix mixed_jacobi_rhs(const Geometry& geom, const FoliationTensors& ft, int i, int j) {
  const auto& model = geom.model();
  const int vi = model.vertical()[i], vj = model.vertical()[j];
  const Matrix tj = geom.embed_horizontal(ft.tsharp[j]);
  Matrix w = geom.gamma()[vi] * tj - tj * geom.gamma()[vi];
  for (int k = 0; k < model.p(); ++k) {
    const double coeff = geom.gamma()[vi](model.vertical()[k], vj);  // <nabla_{xi_i} xi_j, xi_k>
    if (coeff != 0.0) w -= coeff * geom.embed_horizontal(ft.tsharp[k]);
  }
  return geom.restrict_horizontal(w) - ft.tsharp[j] * ft.tsharp[i];
}

/// deta^i as a 2-form on the whole frame: deta(X,Y) = -1/2 eta([X,Y]).
inline Matrix d_eta(const LieFoliationModel& model, int i) {
  return -0.5 * model.c(model.vertical()[i]);
}

/// Same for an arbitrary covector eta (coefficient row).
inline Matrix d_eta(const LieFoliationModel& model, const Vector& eta) {
  Matrix d = Matrix::Zero(model.dim(), model.dim());
  for (int k = 0; k < model.dim(); ++k)
    if (eta(k) != 0.0) d -= 0.5 * eta(k) * model.c(k);
  return d;
}

/// Fundamental 2-form of (g, phi): F(X,Y) = g(X, phi Y).
inline Matrix two_form(const Matrix& g, const Matrix& phi) { return g * phi; }

/// Nijenhuis tensor of phi at a frame pair:
/// N(X,Y) = phi^2 [X,Y] + [phi X, phi Y] - phi [phi X, Y] - phi [X, phi Y].
inline Vector nijenhuis_pair(const LieFoliationModel& model, const Matrix& phi, int i, int j) {
  const Vector ei = Vector::Unit(model.dim(), i), ej = Vector::Unit(model.dim(), j);
  return phi * (phi * model.bracket(i, j)) + model.bracket(phi.col(i), phi.col(j)) -
         phi * model.bracket(phi.col(i), ej) - phi * model.bracket(ei, phi.col(j));
}

/// Normality defect of phi against the pairs (xi_k, eta^k):
/// max over frame pairs of | N_phi + sign * 2 sum_k deta^k (x) xi_k |.
inline double normality_residual(const LieFoliationModel& model, const Matrix& phi,
                                 const std::vector<std::pair<Vector, Vector>>& xi_eta,
                                 double sign = 1.0) {
  std::vector<Matrix> detas;
  detas.reserve(xi_eta.size());
  for (const auto& [xi, eta] : xi_eta) {
    (void)xi;
    detas.push_back(d_eta(model, eta));
  }
  double res = 0.0;
  for (int i = 0; i < model.dim(); ++i)
    for (int j = i + 1; j < model.dim(); ++j) {
      Vector v = nijenhuis_pair(model, phi, i, j);
      for (size_t k = 0; k < xi_eta.size(); ++k) v += sign * 2.0 * detas[k](i, j) * xi_eta[k].first;
      res = std::max(res, max_abs(v));
    }
  return res;
}

/// Compatibility of the metric with the foliation: leaves totally geodesic
/// and the horizontal A-tensors vanishing (Riemannian foliation).
struct CompatReport {
  double totally_geodesic = 0.0;  ///< max |(nabla_{xi_i} xi_j)^perp|
  double riemannian = 0.0;        ///< max |A_{xi_i}|
  bool pass = false;
};

inline CompatReport check_compatible(const Geometry& geom) {
  const auto& model = geom.model();
  CompatReport rep;
  for (int i = 0; i < model.p(); ++i) {
    for (int j = 0; j < model.p(); ++j) {
      const Vector col = geom.gamma()[model.vertical()[i]].col(model.vertical()[j]);
      for (int h : model.horizontal())
        rep.totally_geodesic = std::max(rep.totally_geodesic, std::abs(col(h)));
    }
  }
  const FoliationTensors ft = foliation_tensors(geom);
  for (int i = 0; i < model.p(); ++i) rep.riemannian = std::max(rep.riemannian, max_abs(ft.a[i]));
  rep.pass = rep.totally_geodesic <= 1e-12 && rep.riemannian <= 1e-12;
  return rep;
}

inline CompatReport check_compatible(const LieFoliationModel& model) {
  return check_compatible(Geometry(model));
}

inline CompatReport check_compatible(const LieFoliationModel& model, const Matrix& g) {
  return check_compatible(Geometry(model, g));
}

// ---- full geometry report ----

struct GeometryReport {
  std::string model;
  int dim = 0;
  std::vector<int> vertical;
  std::vector<std::string> frame;
  std::vector<Matrix> gamma;
  std::vector<std::vector<Matrix>> curvature;
  std::vector<Matrix> tsharp, a, c;
  Matrix r_g, ric_perp, ric_perp_algebraic;
  double discrepancy = 0.0;  ///< max-abs gap between the two Ric^perp routes
  CompatReport compat;
};

inline GeometryReport geometry_report(const LieFoliationModel& model) {
  Geometry geom(model);
  GeometryReport rep;
  rep.model = model.name();
  rep.dim = model.dim();
  rep.vertical = model.vertical();
  rep.frame = model.frame();
  rep.gamma = geom.gamma();
  rep.curvature.assign(model.dim(), std::vector<Matrix>(model.dim()));
  for (int i = 0; i < model.dim(); ++i)
    for (int j = 0; j < model.dim(); ++j) rep.curvature[i][j] = geom.curv_op(i, j);
  const FoliationTensors ft = foliation_tensors(geom);
  rep.tsharp = ft.tsharp;
  rep.a = ft.a;
  rep.c = ft.c;
  const PartialRicci pr = partial_ricci(geom);
  rep.r_g = pr.r;
  rep.ric_perp = pr.ric;
  rep.ric_perp_algebraic = partial_ricci_algebraic(model, geom.g()).ric;
  rep.discrepancy = max_abs(Matrix(pr.ric - rep.ric_perp_algebraic));
  rep.compat = check_compatible(geom);
  return rep;
}

namespace detail {

inline Json flatten(const Matrix& m) {
  Json a = Json::array();
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) a.push_back(m(i, j));
  return a;
}

}  // namespace detail

inline Json to_json(const GeometryReport& rep) {
  Json j;
  j["model"] = rep.model;
  j["dim"] = rep.dim;
  j["vertical"] = rep.vertical;
  j["frame"] = rep.frame;
  j["index_order"] =
      "gamma[i]: row-major matrix of nabla_{E_i}, column j = coords of nabla_{E_i} E_j; "
      "curvature[i*dim+j]: row-major matrix of R(E_i,E_j); "
      "tsharp/a/c[k], r_g, ric_perp: row-major on horizontal positions";
  Json gam = Json::array();
  for (const auto& m : rep.gamma) gam.push_back(detail::flatten(m));
  j["gamma"] = gam;
  Json curv = Json::array();
  for (const auto& row : rep.curvature)
    for (const auto& m : row) curv.push_back(detail::flatten(m));
  j["curvature"] = curv;
  for (const char* key : {"tsharp", "a", "c"}) {
    const auto& src = key == std::string("tsharp") ? rep.tsharp : key == std::string("a") ? rep.a : rep.c;
    Json arr = Json::array();
    for (const auto& m : src) arr.push_back(detail::flatten(m));
    j[key] = arr;
  }
  j["r_g"] = detail::flatten(rep.r_g);
  j["ric_perp"] = detail::flatten(rep.ric_perp);
  j["ric_perp_algebraic"] = detail::flatten(rep.ric_perp_algebraic);
  j["discrepancy"] = rep.discrepancy;
  j["compat"] = {{"totally_geodesic", rep.compat.totally_geodesic},
                 {"riemannian", rep.compat.riemannian},
                 {"pass", rep.compat.pass}};
  return j;
}

}  // namespace gfol
