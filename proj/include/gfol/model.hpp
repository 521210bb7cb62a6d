#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gfol/error.hpp"
#include "gfol/linalg.hpp"

namespace gfol {

using Json = nlohmann::json;

/// Sparse bracket table: (i,j) with i<j maps slot k to the coefficient of
/// E_k in [E_i, E_j].
using BracketTable = std::map<std::pair<int, int>, std::map<int, double>>;

namespace detail {

/// Left-multiplication operators by i, j, k on the quaternions, basis (1,i,j,k).
/// Satisfy J1*J2 = J3 cyclically and Ji^2 = -I.
inline std::array<Matrix, 3> quaternionic_j() {
  Matrix j1(4, 4), j2(4, 4), j3(4, 4);
  j1 << 0, -1, 0, 0,
        1,  0, 0, 0,
        0,  0, 0, -1,
        0,  0, 1, 0;
  j2 << 0, 0, -1, 0,
        0, 0,  0, 1,
        1, 0,  0, 0,
        0, -1, 0, 0;
  j3 << 0, 0, 0, -1,
        0, 0, -1, 0,
        0, 1,  0, 0,
        1, 0,  0, 0;
  return {j1, j2, j3};
}

}  // namespace detail

/// A g-foliation model: a Lie algebra given by a frame E_1..E_N with sparse
/// structure constants, an invariant metric G0, and the index set V of the
/// vertical (leafwise) directions xi_1..xi_p.  Instances are immutable and
/// validated on construction.
class LieFoliationModel {
public:
  /// Builds and validates a model.  Throws ValidationError / DegenerateMetric
  /// when an invariant fails; never normalizes silently.
  static LieFoliationModel make(std::string name, int dim, std::vector<int> vertical,
                                std::vector<std::string> frame, BracketTable table, Matrix metric,
                                Json structure_spec = Json()) {
    LieFoliationModel m;
    m.name_ = std::move(name);
    m.dim_ = dim;
    m.vertical_ = std::move(vertical);
    m.frame_ = std::move(frame);
    m.table_ = std::move(table);
    m.G0_ = std::move(metric);
    m.structure_spec_ = std::move(structure_spec);
    m.finalize();
    return m;
  }

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  /// Number of vertical directions (the foliation dimension p).
  int p() const { return static_cast<int>(vertical_.size()); }
  /// Dimension of the horizontal distribution D.
  int hdim() const { return dim_ - p(); }
  const std::vector<int>& vertical() const { return vertical_; }
  const std::vector<int>& horizontal() const { return horizontal_; }
  const std::vector<std::string>& frame() const { return frame_; }
  const Matrix& metric() const { return G0_; }
  const BracketTable& table() const { return table_; }
  /// Structure block embedded in a model file; null when absent.
  const Json& structure_spec() const { return structure_spec_; }

  bool is_vertical_index(int i) const { return vpos_[i] >= 0; }

  /// c(k) is the N x N matrix with entry (i,j) = coefficient of E_k in [E_i, E_j].
  const Matrix& c(int k) const { return c_[k]; }

  /// Frame coordinates of [E_i, E_j].
  Vector bracket(int i, int j) const {
    Vector z = Vector::Zero(dim_);
    for (int k = 0; k < dim_; ++k) z(k) = c_[k](i, j);
    return z;
  }

  /// Bilinear extension of the bracket to coordinate vectors.
  Vector bracket(const Vector& x, const Vector& y) const {
    Vector z = Vector::Zero(dim_);
    for (const auto& [ij, coeffs] : table_) {
      const double w = x(ij.first) * y(ij.second) - x(ij.second) * y(ij.first);
      if (w == 0.0) continue;
      for (const auto& [k, v] : coeffs) z(k) += w * v;
    }
    return z;
  }

  /// Vertical coefficient tensor Theta_i on D: Theta_i(a,b) = 1/2 <[E_a, E_b], xi_i>
  /// over horizontal positions a,b.  Constant along the partial Ricci flow.
  Matrix theta(int i) const {
    const int m = hdim();
    Matrix th(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) th(a, b) = 0.5 * c_[vertical_[i]](horizontal_[a], horizontal_[b]);
    return th;
  }

  /// Horizontal block of a full metric (defaults to G0).
  Matrix horizontal_block(const Matrix& g) const {
    const int m = hdim();
    Matrix h(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) h(a, b) = g(horizontal_[a], horizontal_[b]);
    return h;
  }
  Matrix horizontal_block() const { return horizontal_block(G0_); }

  /// Full metric assembled from a horizontal block, vertical block untouched
  /// (copied bit-for-bit from G0).
  Matrix assemble_metric(const Matrix& hblock) const {
    Matrix g = G0_;
    const int m = hdim();
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) g(horizontal_[a], horizontal_[b]) = hblock(a, b);
    return g;
  }

  bool horizontal_posdef() const { return horizontal_posdef_; }

  /// Copy with a different invariant metric; revalidated.
  LieFoliationModel with_metric(Matrix g, std::string new_name = "") const {
    LieFoliationModel m = *this;
    m.G0_ = std::move(g);
    if (!new_name.empty()) m.name_ = std::move(new_name);
    m.finalize();
    return m;
  }

  /// Max-abs Jacobi identity defect over all frame triples.
  double jacobi_residual() const {
    double r = 0.0;
    for (int i = 0; i < dim_; ++i)
      for (int j = i + 1; j < dim_; ++j)
        for (int k = j + 1; k < dim_; ++k) {
          Vector s = bracket(bracket(i, j), unit(k)) + bracket(bracket(j, k), unit(i)) +
                     bracket(bracket(k, i), unit(j));
          r = std::max(r, max_abs(s));
        }
    return r;
  }

  /// Max-abs vertical component of [E_v, E_h] over vertical v, horizontal h;
  /// zero means the bracket preserves the horizontal distribution.
  double horizontal_invariance_residual() const {
    double r = 0.0;
    for (int v : vertical_)
      for (int h : horizontal_) {
        Vector z = bracket(v, h);
        for (int w : vertical_) r = std::max(r, std::abs(z(w)));
      }
    return r;
  }

  // ---- built-in families ----

  /// Heisenberg-type algebra of dimension 2n+1: [e_{2k-1}, e_{2k}] = 2 a_k xi.
  static LieFoliationModel heisenberg(const std::vector<double>& weights) {
    if (weights.empty()) fail(ErrorCode::BadParams, "heisenberg needs at least one weight");
    for (double a : weights)
      if (a == 0.0) fail(ErrorCode::BadParams, "heisenberg weight must be nonzero");
    const int n = static_cast<int>(weights.size());
    const int dim = 2 * n + 1;
    std::vector<std::string> frame;
    for (int i = 1; i <= 2 * n; ++i) frame.push_back("e" + std::to_string(i));
    frame.push_back("xi");
    BracketTable t;
    for (int k = 0; k < n; ++k) t[{2 * k, 2 * k + 1}][2 * n] = 2.0 * weights[k];
    std::ostringstream name;
    name << "heisenberg:";
    for (int k = 0; k < n; ++k) name << (k ? "," : "") << weights[k];
    return make(name.str(), dim, {2 * n}, std::move(frame), std::move(t),
                Matrix::Identity(dim, dim));
  }

  /// Quaternionic Heisenberg algebra, dim 7: three central xi_i and
  /// [X,Y] = 2a sum_i <J_i X, Y> xi_i on R^4.
  static LieFoliationModel quat_heisenberg(double a) {
    if (a == 0.0) fail(ErrorCode::BadParams, "quat_heisenberg weight must be nonzero");
    const auto J = detail::quaternionic_j();
    std::vector<std::string> frame = {"e1", "e2", "e3", "e4", "xi1", "xi2", "xi3"};
    BracketTable t;
    for (int x = 0; x < 4; ++x)
      for (int y = x + 1; y < 4; ++y)
        for (int i = 0; i < 3; ++i) {
          const double coeff = 2.0 * a * J[i](y, x);  // <J_i e_x, e_y>
          if (coeff != 0.0) t[{x, y}][4 + i] = coeff;
        }
    std::ostringstream name;
    name << "quat_heisenberg:" << a;
    return make(name.str(), 7, {4, 5, 6}, std::move(frame), std::move(t),
                Matrix::Identity(7, 7));
  }

  /// S-type algebra of dimension 2n+p: [e_{2k-1}, e_{2k}] = 2a (xi_1 + ... + xi_p).
  static LieFoliationModel s_model(int n, int p, double a) {
    if (n < 1 || p < 1) fail(ErrorCode::BadParams, "s_model needs n >= 1 and p >= 1");
    if (a == 0.0) fail(ErrorCode::BadParams, "s_model weight must be nonzero");
    const int dim = 2 * n + p;
    std::vector<std::string> frame;
    for (int i = 1; i <= 2 * n; ++i) frame.push_back("e" + std::to_string(i));
    for (int i = 1; i <= p; ++i) frame.push_back("xi" + std::to_string(i));
    std::vector<int> vertical;
    for (int i = 0; i < p; ++i) vertical.push_back(2 * n + i);
    BracketTable t;
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < p; ++i) t[{2 * k, 2 * k + 1}][2 * n + i] = 2.0 * a;
    std::ostringstream name;
    name << "s_model:" << n << "," << p << "," << a;
    return make(name.str(), dim, std::move(vertical), std::move(frame), std::move(t),
                Matrix::Identity(dim, dim));
  }

  /// Para variant of dimension 2n+p with neutral horizontal metric: frame
  /// u_1..u_n, v_1..v_n, xi_1..xi_p, brackets [u_k, v_k] = 2 (xi_1 + ... + xi_p),
  /// g(u_k, v_l) = delta_kl on the isotropic halves.
  static LieFoliationModel para_model(int n, int p) {
    if (n < 1 || p < 1) fail(ErrorCode::BadParams, "para_model needs n >= 1 and p >= 1");
    const int dim = 2 * n + p;
    std::vector<std::string> frame;
    for (int i = 1; i <= n; ++i) frame.push_back("u" + std::to_string(i));
    for (int i = 1; i <= n; ++i) frame.push_back("v" + std::to_string(i));
    for (int i = 1; i <= p; ++i) frame.push_back("xi" + std::to_string(i));
    std::vector<int> vertical;
    for (int i = 0; i < p; ++i) vertical.push_back(2 * n + i);
    BracketTable t;
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < p; ++i) t[{k, n + k}][2 * n + i] = 2.0;
    Matrix g = Matrix::Zero(dim, dim);
    for (int k = 0; k < n; ++k) {
      g(k, n + k) = 1.0;
      g(n + k, k) = 1.0;
    }
    for (int i = 0; i < p; ++i) g(2 * n + i, 2 * n + i) = 1.0;
    std::ostringstream name;
    name << "para_model:" << n << "," << p;
    return make(name.str(), dim, std::move(vertical), std::move(frame), std::move(t),
                std::move(g));
  }

  /// su(2) with the bi-invariant metric: [e1,e2] = 2e3 cyclically, vertical {e3}.
  static LieFoliationModel su2() {
    BracketTable t;
    t[{0, 1}][2] = 2.0;
    t[{1, 2}][0] = 2.0;
    t[{0, 2}][1] = -2.0;  // [e3,e1] = 2 e2
    return make("su2", 3, {2}, {"e1", "e2", "e3"}, std::move(t), Matrix::Identity(3, 3));
  }

  /// Dispatch by family name; throws UnknownModel / BadParams.
  static LieFoliationModel builtin(const std::string& family, const std::vector<double>& params) {
    auto want_int = [&](double x, const char* what) {
      if (x != std::floor(x)) fail(ErrorCode::BadParams, std::string(what) + " must be an integer");
      return static_cast<int>(x);
    };
    if (family == "heisenberg") return heisenberg(params);
    if (family == "quat_heisenberg") {
      if (params.size() != 1) fail(ErrorCode::BadParams, "quat_heisenberg takes one parameter");
      return quat_heisenberg(params[0]);
    }
    if (family == "s_model") {
      if (params.size() != 3) fail(ErrorCode::BadParams, "s_model takes n,p,a");
      return s_model(want_int(params[0], "n"), want_int(params[1], "p"), params[2]);
    }
    if (family == "para_model") {
      if (params.size() != 2) fail(ErrorCode::BadParams, "para_model takes n,p");
      return para_model(want_int(params[0], "n"), want_int(params[1], "p"));
    }
    if (family == "su2") {
      if (!params.empty()) fail(ErrorCode::BadParams, "su2 takes no parameters");
      return su2();
    }
    fail(ErrorCode::UnknownModel, "no built-in family named '" + family + "'");
  }

  /// Parses "family" or "family:p1,p2,..." references used by the CLI.
  static LieFoliationModel builtin_from_ref(const std::string& ref) {
    const auto colon = ref.find(':');
    const std::string family = ref.substr(0, colon);
    std::vector<double> params;
    if (colon != std::string::npos) {
      std::stringstream ss(ref.substr(colon + 1));
      std::string item;
      while (std::getline(ss, item, ',')) {
        try {
          size_t pos = 0;
          params.push_back(std::stod(item, &pos));
          if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
          fail(ErrorCode::BadParams, "bad parameter '" + item + "' in '" + ref + "'");
        }
      }
    }
    return builtin(family, params);
  }

private:
  LieFoliationModel() = default;

  Vector unit(int k) const {
    Vector e = Vector::Zero(dim_);
    e(k) = 1.0;
    return e;
  }

  void finalize() {
    if (dim_ < 2) fail(ErrorCode::ValidationError, "dim must be at least 2");
    if (vertical_.empty() || static_cast<int>(vertical_.size()) >= dim_)
      fail(ErrorCode::ValidationError, "need 1 <= |vertical| < dim");
    std::vector<bool> seen(dim_, false);
    for (int v : vertical_) {
      if (v < 0 || v >= dim_) fail(ErrorCode::ValidationError, "vertical index out of range");
      if (seen[v]) fail(ErrorCode::ValidationError, "duplicate vertical index");
      seen[v] = true;
    }
    vpos_.assign(dim_, -1);
    for (int i = 0; i < p(); ++i) vpos_[vertical_[i]] = i;
    horizontal_.clear();
    for (int i = 0; i < dim_; ++i)
      if (vpos_[i] < 0) horizontal_.push_back(i);

    if (static_cast<int>(frame_.size()) != dim_)
      fail(ErrorCode::ValidationError, "frame must list dim labels");
    for (size_t i = 0; i < frame_.size(); ++i) {
      if (frame_[i].empty()) fail(ErrorCode::ValidationError, "empty frame label");
      for (size_t j = i + 1; j < frame_.size(); ++j)
        if (frame_[i] == frame_[j])
          fail(ErrorCode::ValidationError, "duplicate frame label '" + frame_[i] + "'");
    }

    for (const auto& [ij, coeffs] : table_) {
      auto [i, j] = ij;
      if (i < 0 || j < 0 || i >= dim_ || j >= dim_ || i >= j)
        fail(ErrorCode::ValidationError, "bracket indices must satisfy 0 <= i < j < dim");
      for (const auto& [k, v] : coeffs) {
        if (k < 0 || k >= dim_) fail(ErrorCode::ValidationError, "bracket slot out of range");
        (void)v;
      }
    }
    c_.assign(dim_, Matrix::Zero(dim_, dim_));
    for (const auto& [ij, coeffs] : table_)
      for (const auto& [k, v] : coeffs) {
        c_[k](ij.first, ij.second) = v;
        c_[k](ij.second, ij.first) = -v;
      }

    validate_metric();

    const double jr = jacobi_residual();
    if (jr > 1e-12) {
      std::ostringstream msg;
      msg << "Jacobi identity fails, residual " << jr;
      fail(ErrorCode::ValidationError, msg.str());
    }
    const double hr = horizontal_invariance_residual();
    if (hr > 1e-12) {
      std::ostringstream msg;
      msg << "[vertical, horizontal] leaves the horizontal distribution, residual " << hr;
      fail(ErrorCode::ValidationError, msg.str());
    }
  }

  // Invariant violations are ValidationError; DegenerateMetric is reserved
  // for an actually singular (or non-finite) G0.
  void validate_metric() {
    if (G0_.rows() != dim_ || G0_.cols() != dim_)
      fail(ErrorCode::ValidationError, "metric must be dim x dim");
    if (!G0_.allFinite()) fail(ErrorCode::DegenerateMetric, "metric has non-finite entries");
    if (sym_residual(G0_) > 1e-12) fail(ErrorCode::ValidationError, "metric must be symmetric");
    for (int a = 0; a < p(); ++a)
      for (int b = 0; b < p(); ++b) {
        const double want = a == b ? 1.0 : 0.0;
        if (std::abs(G0_(vertical_[a], vertical_[b]) - want) > 1e-12)
          fail(ErrorCode::ValidationError,
               "vertical metric block must be the identity (not normalized silently)");
      }
    for (int v : vertical_)
      for (int h : horizontal_)
        if (std::abs(G0_(v, h)) > 1e-12)
          fail(ErrorCode::ValidationError, "metric must be block-diagonal across vertical/horizontal");
    const Matrix hb = horizontal_block();
    if (min_abs_eig_sym(hb) <= 1e-10)
      fail(ErrorCode::DegenerateMetric, "horizontal metric block is degenerate");
    horizontal_posdef_ = min_eig_sym(hb) > 1e-10;
  }

  std::string name_;
  int dim_ = 0;
  std::vector<int> vertical_;
  std::vector<int> horizontal_;
  std::vector<int> vpos_;  // global index -> vertical position, -1 if horizontal
  std::vector<std::string> frame_;
  BracketTable table_;
  std::vector<Matrix> c_;
  Matrix G0_;
  bool horizontal_posdef_ = false;
  Json structure_spec_;
};

// ---- model file format ----

namespace detail {

inline int parse_slot(const std::string& key, int dim) {
  size_t pos = 0;
  int slot = -1;
  try {
    slot = std::stoi(key, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != key.size() || slot < 0 || slot >= dim)
    fail(ErrorCode::ParseError, "bracket coefficient key '" + key + "' is not a valid slot");
  return slot;
}

}  // namespace detail

/// Parses a model from its JSON text.  Keys: name, dim, vertical, frame,
/// brackets, metric, and optionally structure; anything else is rejected.
inline LieFoliationModel load_model(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    fail(ErrorCode::ParseError, e.what());
  }
  if (!j.is_object()) fail(ErrorCode::ParseError, "model file must be a JSON object");
  static const std::vector<std::string> allowed = {"name",     "dim",    "vertical", "frame",
                                                   "brackets", "metric", "structure"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      fail(ErrorCode::ParseError, "unknown key '" + key + "'");
  }
  for (const char* req : {"name", "dim", "vertical", "frame", "brackets", "metric"})
    if (!j.contains(req)) fail(ErrorCode::ParseError, std::string("missing key '") + req + "'");

  if (!j["name"].is_string()) fail(ErrorCode::ParseError, "'name' must be a string");
  if (!j["dim"].is_number_integer()) fail(ErrorCode::ParseError, "'dim' must be an integer");
  const int dim = j["dim"].get<int>();
  if (dim < 2 || dim > 64) fail(ErrorCode::ParseError, "'dim' out of supported range");

  if (!j["vertical"].is_array()) fail(ErrorCode::ParseError, "'vertical' must be an array");
  std::vector<int> vertical;
  for (const auto& v : j["vertical"]) {
    if (!v.is_number_integer()) fail(ErrorCode::ParseError, "'vertical' entries must be integers");
    vertical.push_back(v.get<int>());
  }

  if (!j["frame"].is_array()) fail(ErrorCode::ParseError, "'frame' must be an array");
  std::vector<std::string> frame;
  for (const auto& f : j["frame"]) {
    if (!f.is_string()) fail(ErrorCode::ParseError, "'frame' entries must be strings");
    frame.push_back(f.get<std::string>());
  }

  if (!j["brackets"].is_array()) fail(ErrorCode::ParseError, "'brackets' must be an array");
  BracketTable table;
  for (const auto& b : j["brackets"]) {
    if (!b.is_object()) fail(ErrorCode::ParseError, "bracket entries must be objects");
    for (const auto& [key, value] : b.items()) {
      (void)value;
      if (key != "i" && key != "j" && key != "coeffs")
        fail(ErrorCode::ParseError, "unknown bracket key '" + key + "'");
    }
    if (!b.contains("i") || !b.contains("j") || !b.contains("coeffs"))
      fail(ErrorCode::ParseError, "bracket entries need i, j, coeffs");
    if (!b["i"].is_number_integer() || !b["j"].is_number_integer())
      fail(ErrorCode::ParseError, "bracket i, j must be integers");
    const int i = b["i"].get<int>();
    const int jj = b["j"].get<int>();
    if (i >= jj) fail(ErrorCode::ParseError, "bracket entries must have i < j");
    if (table.count({i, jj})) fail(ErrorCode::ParseError, "duplicate bracket entry");
    if (!b["coeffs"].is_object()) fail(ErrorCode::ParseError, "'coeffs' must be an object");
    std::map<int, double> coeffs;
    for (const auto& [key, value] : b["coeffs"].items()) {
      if (!value.is_number()) fail(ErrorCode::ParseError, "bracket coefficients must be numbers");
      coeffs[detail::parse_slot(key, dim)] = value.get<double>();
    }
    table[{i, jj}] = std::move(coeffs);
  }

  Matrix metric;
  const auto& jm = j["metric"];
  if (jm.is_string()) {
    if (jm.get<std::string>() != "identity")
      fail(ErrorCode::ParseError, "'metric' string form must be \"identity\"");
    metric = Matrix::Identity(dim, dim);
  } else if (jm.is_array()) {
    if (static_cast<int>(jm.size()) != dim * dim)
      fail(ErrorCode::ParseError, "'metric' array must have dim*dim entries (row-major)");
    metric.resize(dim, dim);
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) {
        const auto& e = jm[a * dim + b];
        if (!e.is_number()) fail(ErrorCode::ParseError, "'metric' entries must be numbers");
        metric(a, b) = e.get<double>();
      }
  } else {
    fail(ErrorCode::ParseError, "'metric' must be \"identity\" or a row-major array");
  }

  Json structure = j.contains("structure") ? j["structure"] : Json();
  if (!structure.is_null() && !structure.is_object())
    fail(ErrorCode::ParseError, "'structure' must be an object");

  return LieFoliationModel::make(j["name"].get<std::string>(), dim, std::move(vertical),
                                 std::move(frame), std::move(table), std::move(metric),
                                 std::move(structure));
}

/// Inverse of load_model on all fields (values round-trip bit-exactly).
inline Json serialize_json(const LieFoliationModel& m) {
  Json j;
  j["name"] = m.name();
  j["dim"] = m.dim();
  j["vertical"] = m.vertical();
  j["frame"] = m.frame();
  Json brackets = Json::array();
  for (const auto& [ij, coeffs] : m.table()) {
    Json entry;
    entry["i"] = ij.first;
    entry["j"] = ij.second;
    Json c = Json::object();
    for (const auto& [k, v] : coeffs) c[std::to_string(k)] = v;
    entry["coeffs"] = c;
    brackets.push_back(entry);
  }
  j["brackets"] = brackets;
  std::vector<double> g;
  g.reserve(m.dim() * m.dim());
  for (int a = 0; a < m.dim(); ++a)
    for (int b = 0; b < m.dim(); ++b) g.push_back(m.metric()(a, b));
  j["metric"] = g;
  if (!m.structure_spec().is_null()) j["structure"] = m.structure_spec();
  return j;
}

inline std::string serialize(const LieFoliationModel& m) { return serialize_json(m).dump(2); }

}  // namespace gfol
