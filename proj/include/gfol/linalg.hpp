#pragma once

#include <Eigen/Dense>
#include <vector>

namespace gfol {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Entrywise max-abs; the residual norm used throughout.
inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double max_abs(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

inline double sym_residual(const Matrix& m) { return max_abs(Matrix(m - m.transpose())); }

/// Skew-adjointness defect of the operator `op` for the metric `g`:
/// max-abs of op^T g + g op.
inline double skew_residual(const Matrix& op, const Matrix& g) {
  return max_abs(Matrix(op.transpose() * g + g * op));
}

/// Self-adjointness defect of the operator `op` for the metric `g`.
inline double selfadjoint_residual(const Matrix& op, const Matrix& g) {
  return max_abs(Matrix(op.transpose() * g - g * op));
}

/// Numerical rank: singular values above `tol`.
inline int rank_of(const Matrix& m, double tol = 1e-10) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  int r = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > tol) ++r;
  return r;
}

/// Smallest |eigenvalue| of a symmetric matrix (nondegeneracy measure).
inline double min_abs_eig_sym(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().minCoeff();
}

inline double min_eig_sym(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline bool is_posdef(const Matrix& m, double tol = 1e-10) {
  return sym_residual(m) <= 1e-12 && min_eig_sym(m) > tol;
}

/// Sorted eigenvalues of `op` self-adjoint w.r.t. the positive metric `g`
/// (generalized problem  g*op*v = mu*g*v  solved as  sym(g*op) v = mu g v).
inline Vector g_selfadjoint_eigenvalues(const Matrix& op, const Matrix& g) {
  Matrix a = g * op;
  a = 0.5 * (a + a.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(a, g, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  return es.eigenvalues();
}

/// Eigenpairs of a g-self-adjoint operator; columns of the returned basis are
/// g-orthonormal eigenvectors, eigenvalues ascending.
inline std::pair<Vector, Matrix> g_selfadjoint_eigensystem(const Matrix& op, const Matrix& g) {
  Matrix a = g * op;
  a = 0.5 * (a + a.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(a, g);
  return {es.eigenvalues(), es.eigenvectors()};
}

}  // namespace gfol
