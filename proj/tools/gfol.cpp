// gfol: workbench front end for weak metric structures on Lie-algebra
// foliation models.  One command per process; every run can be replayed
// from its manifest.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <gfol/gfol.hpp>

namespace {

using gfol::Error;
using gfol::ErrorCode;
using gfol::Json;
using gfol::LieFoliationModel;
using gfol::Matrix;
using gfol::format_g12;

int exit_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::NotConverged:
    case ErrorCode::PositivityLost:
    case ErrorCode::BlowupDetected:
      return 2;
    default:
      return 65;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) gfol::fail(ErrorCode::IoError, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) gfol::fail(ErrorCode::IoError, "cannot write " + path);
  out << text;
}

std::string matrix_lines(const Matrix& m, const char* indent = "  ") {
  std::ostringstream os;
  for (int i = 0; i < m.rows(); ++i) {
    os << indent;
    for (int j = 0; j < m.cols(); ++j) os << (j ? " " : "") << format_g12(m(i, j));
    os << "\n";
  }
  return os.str();
}

/// Model source flags shared by verify / geometry / flow.
struct ModelArgs {
  std::string builtin;
  std::string path;

  void attach(CLI::App* sub) {
    auto* src = sub->add_option_group("source", "model source (pick one)");
    src->add_option("--builtin", builtin, "built-in reference, e.g. heisenberg:2,3");
    src->add_option("--model", path, "path to a model JSON file");
    src->require_option(1);
  }

  LieFoliationModel load() const {
    if (!builtin.empty()) return LieFoliationModel::builtin_from_ref(builtin);
    return gfol::load_model(read_file(path));
  }

  Json manifest_inputs() const {
    Json j = Json::object();
    if (!builtin.empty())
      j["builtin"] = builtin;
    else
      j["model"] = path;
    return j;
  }
};

void finish_manifest(gfol::RunManifest& m, const std::string& path) {
  m.seed = gfol::resolve_seed(0);
  m.timestamp = gfol::utc_timestamp();
  gfol::write_manifest(m, path);
  std::cout << "wrote " << path << "\n";
}

// ---------------------------------------------------------------------------
// models

struct FamilyRow {
  const char* family;
  const char* params;
  const char* dim;
  const char* kind;
  const char* cls;
};

constexpr FamilyRow kFamilies[] = {
    {"heisenberg", "a1,...,an", "2n+1", "contact",
     "weak contact metric; Sasakian when every weight is 1"},
    {"quat_heisenberg", "a", "7", "p_contact",
     "weak almost 3-contact metric; classical at a = 1"},
    {"s_model", "n,p,a", "2n+p", "f_structure",
     "weak almost S-structure; metric S-structure at a = 1"},
    {"para_model", "n,p", "2n+p", "para_phi", "para-S (classical)"},
    {"su2", "(none)", "3", "contact", "Sasakian (classical)"},
};

int cmd_models(bool as_json) {
  if (as_json) {
    Json arr = Json::array();
    for (const auto& row : kFamilies)
      arr.push_back({{"family", row.family},
                     {"params", row.params},
                     {"dim", row.dim},
                     {"kind", row.kind},
                     {"class", row.cls}});
    std::cout << arr.dump(2) << "\n";
    return 0;
  }
  std::printf("%-16s %-11s %-6s %-12s %s\n", "family", "params", "dim", "kind", "class");
  for (const auto& row : kFamilies)
    std::printf("%-16s %-11s %-6s %-12s %s\n", row.family, row.params, row.dim, row.kind, row.cls);
  return 0;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  ModelArgs source;
  std::string kind;
  std::string expect;
  std::string json_path;
  std::string manifest_path;
};

int cmd_verify(const VerifyArgs& a) {
  const LieFoliationModel model = a.source.load();
  std::optional<gfol::StructureKind> kind;
  if (!a.kind.empty()) kind = gfol::kind_from_name(a.kind);
  const gfol::FramedStructure s = gfol::default_structure(model, kind);
  const gfol::Classification cls = gfol::classify(model, s);

  std::cout << "model: " << model.name() << "\n";
  std::cout << "kind: " << gfol::kind_name(s.kind) << "\n";
  std::cout << "label: " << cls.label << "\n";
  std::cout << "slug: " << cls.slug << "\n";
  std::cout << "classical: " << (cls.classical ? "yes" : "no") << "\n";
  std::cout << "residuals:\n";
  for (const auto& [key, val] : cls.residuals)
    std::printf("  %-14s %s\n", key.c_str(), format_g12(val).c_str());

  if (!a.json_path.empty()) {
    Json rep = gfol::to_json(cls);
    rep["model"] = model.name();
    rep["kind"] = gfol::kind_name(s.kind);
    write_file(a.json_path, rep.dump(2) + "\n");
    std::cout << "wrote " << a.json_path << "\n";
  }
  if (!a.manifest_path.empty()) {
    gfol::RunManifest m;
    m.command = "verify";
    m.inputs = a.source.manifest_inputs();
    m.config = {{"kind", a.kind.empty() ? Json() : Json(a.kind)},
                {"expect", a.expect.empty() ? Json() : Json(a.expect)}};
    if (!a.json_path.empty()) m.outputs.push_back(a.json_path);
    finish_manifest(m, a.manifest_path);
  }
  if (!a.expect.empty() && gfol::detail::slugify(a.expect) != cls.slug) {
    std::cout << "expectation failed: wanted '" << a.expect << "', got '" << cls.slug << "'\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// geometry

struct GeometryArgs {
  ModelArgs source;
  std::string json_path;
  std::string manifest_path;
};

int cmd_geometry(const GeometryArgs& a) {
  const LieFoliationModel model = a.source.load();
  const gfol::GeometryReport rep = gfol::geometry_report(model);

  std::cout << "model: " << model.name() << " (dim " << rep.dim << ")\n";
  std::cout << "r_g:\n" << matrix_lines(rep.r_g);
  std::cout << "ric_perp (curvature route):\n" << matrix_lines(rep.ric_perp);
  std::cout << "ric_perp (algebraic route):\n" << matrix_lines(rep.ric_perp_algebraic);
  std::cout << "discrepancy: " << format_g12(rep.discrepancy) << "\n";
  std::cout << "compat: totally_geodesic " << format_g12(rep.compat.totally_geodesic)
            << ", riemannian " << format_g12(rep.compat.riemannian) << ", pass "
            << (rep.compat.pass ? "yes" : "no") << "\n";

  if (!a.json_path.empty()) {
    write_file(a.json_path, gfol::to_json(rep).dump(2) + "\n");
    std::cout << "wrote " << a.json_path << "\n";
  }
  if (!a.manifest_path.empty()) {
    gfol::RunManifest m;
    m.command = "geometry";
    m.inputs = a.source.manifest_inputs();
    if (!a.json_path.empty()) m.outputs.push_back(a.json_path);
    finish_manifest(m, a.manifest_path);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// flow

struct FlowArgs {
  ModelArgs source;
  double phi = 1.0;
  std::optional<double> t_end;
  double dt = 1e-3;
  int record_every = 10;
  double tol = 1e-8;
  std::string kind;
  bool retract = false;
  std::vector<double> sweep;
  std::string csv_path;
  std::string json_path;
  std::string manifest_path;
};

gfol::FlowConfig flow_config(const FlowArgs& a, double phi) {
  gfol::FlowConfig cfg;
  cfg.phi = phi;
  cfg.t_end = a.t_end;
  cfg.dt = a.dt;
  cfg.record_every = a.record_every;
  cfg.tol = a.tol;
  if (!a.kind.empty()) cfg.kind = gfol::kind_from_name(a.kind);
  return cfg;
}

std::string with_suffix(const std::string& path, const std::string& tag) {
  const auto dot = path.rfind('.');
  const auto slash = path.rfind('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + tag;
  return path.substr(0, dot) + tag + path.substr(dot);
}

struct FlowRun {
  std::string summary;
  std::vector<std::string> outputs;
  int code = 0;
};

FlowRun run_flow_once(const LieFoliationModel& model, const FlowArgs& args, double phi,
                      const std::string& tag) {
  FlowRun run;
  std::ostringstream os;
  const gfol::FlowConfig cfg = flow_config(args, phi);
  gfol::FlowTrajectory traj;
  std::optional<gfol::RetractReport> retract;
  try {
    if (args.retract) {
      retract = gfol::retract_and_verify(model, cfg);
      traj = retract->traj;
    } else {
      traj = gfol::integrate_flow(model, cfg);
      gfol::estimate_rate(traj, phi);
    }
  } catch (const Error& e) {
    os << "error: " << e.what() << "\n";
    run.summary = os.str();
    run.code = exit_for(e.code());
    return run;
  }

  const double t_end = cfg.t_end.value_or(gfol::default_t_end(phi));
  os << "model: " << model.name() << "\n";
  os << "phi: " << format_g12(phi) << "\n";
  os << "t_end: " << format_g12(t_end) << "  dt: " << format_g12(cfg.dt) << "\n";
  os << "samples: " << traj.samples.size() << "\n";
  os << "converged: " << (traj.converged ? "yes" : "no") << " (tol " << format_g12(cfg.tol)
     << ")\n";
  if (traj.rate_estimate)
    os << "rate: " << format_g12(*traj.rate_estimate) << " (4 phi = " << format_g12(4.0 * phi)
       << ")\n";
  else
    os << "rate: n/a (too few departing samples to fit)\n";
  if (retract) {
    os << "at t_end: " << retract->at_t_end.label << "\n";
    os << "at limit: " << retract->at_limit.label << "\n";
    os << "Q gap at limit: " << format_g12(retract->q_identity_gap) << "\n";
    os << "normality at limit: " << format_g12(retract->limit_normality) << "\n";
    os << "kind residual at limit: " << format_g12(retract->kind_residual) << "\n";
    os << "mixed K at limit: [" << format_g12(retract->k_min) << ", "
       << format_g12(retract->k_max) << "]\n";
    os << "fixed point residual: " << format_g12(retract->limit_fixed_point_residual) << "\n";
  }
  if (!args.csv_path.empty()) {
    const std::string path = with_suffix(args.csv_path, tag);
    write_file(path, gfol::to_csv(traj));
    run.outputs.push_back(path);
    os << "wrote " << path << "\n";
  }
  if (!args.json_path.empty()) {
    const std::string path = with_suffix(args.json_path, tag);
    write_file(path, gfol::to_json(traj).dump(2) + "\n");
    run.outputs.push_back(path);
    os << "wrote " << path << "\n";
  }
  run.summary = os.str();
  run.code = traj.converged ? 0 : 2;
  return run;
}

int cmd_flow(const FlowArgs& a) {
  const LieFoliationModel model = a.source.load();
  std::vector<FlowRun> runs;
  if (a.sweep.empty()) {
    runs.push_back(run_flow_once(model, a, a.phi, ""));
  } else {
    // independent runs, each with its own suffixed outputs
    std::vector<std::future<FlowRun>> futures;
    futures.reserve(a.sweep.size());
    for (const double phi : a.sweep) {
      const std::string tag = "_phi" + format_g12(phi);
      futures.push_back(std::async(std::launch::async, [model, a, phi, tag] {
        return run_flow_once(model, a, phi, tag);
      }));
    }
    for (auto& f : futures) runs.push_back(f.get());
  }

  int code = 0;
  bool first = true;
  for (const auto& run : runs) {
    if (!first) std::cout << "\n";
    first = false;
    std::cout << run.summary;
    code = std::max(code, run.code);
  }

  if (!a.manifest_path.empty()) {
    gfol::RunManifest m;
    m.command = "flow";
    m.inputs = a.source.manifest_inputs();
    m.config = {{"phi", a.phi},
                {"t_end", a.t_end ? Json(*a.t_end) : Json()},
                {"dt", a.dt},
                {"record_every", a.record_every},
                {"tol", a.tol},
                {"kind", a.kind.empty() ? Json() : Json(a.kind)},
                {"retract", a.retract}};
    if (!a.sweep.empty()) m.config["sweep"] = a.sweep;
    for (const auto& run : runs)
      for (const auto& out : run.outputs) m.outputs.push_back(out);
    finish_manifest(m, a.manifest_path);
  }
  return code;
}

// ---------------------------------------------------------------------------
// closed-form

struct ClosedFormArgs {
  std::vector<double> mu0;
  std::optional<double> p;
  std::optional<double> phi;
  double alpha = 0.0;
  std::vector<double> t;
  std::optional<double> psi1;
  std::optional<double> psi2;
  bool stationary = false;
  std::optional<double> t_end;
  double dt = 1e-3;
  std::string csv_path;
  std::string manifest_path;
};

int cmd_closed_form(const ClosedFormArgs& a) {
  std::ostringstream csv;
  std::vector<std::string> outputs;
  const bool scalar_mode = a.psi1 || a.psi2 || a.stationary;

  if (scalar_mode) {
    gfol::ScalarOdeSpec spec;
    spec.psi1 = a.psi1.value_or(0.0);
    spec.psi2 = a.psi2.value_or(0.0);
    spec.alpha = a.alpha;
    if (!a.mu0.empty()) spec.mu0 = a.mu0.front();
    if (spec.psi2 < 0.0) gfol::fail(ErrorCode::BadParams, "psi2 must be nonnegative");
    const double disc = std::sqrt(spec.psi1 * spec.psi1 + spec.psi2);
    std::cout << "mu_plus: " << format_g12(0.5 * (-spec.psi1 + disc)) << "\n";
    std::cout << "mu_minus: " << format_g12(0.5 * (-spec.psi1 - disc)) << "\n";
    if (!a.stationary || a.t_end) {
      const gfol::ScalarResult res = gfol::scalar_case_i(spec, a.t_end.value_or(-3.0), a.dt);
      std::cout << "mu(" << format_g12(res.trajectory.back().first)
                << ") = " << format_g12(res.trajectory.back().second) << "\n";
      csv << "t,mu\n";
      for (const auto& [t, mu] : res.trajectory) csv << format_g12(t) << "," << format_g12(mu) << "\n";
    }
  } else if (a.p || a.phi) {
    if (a.mu0.empty() || a.t.empty())
      gfol::fail(ErrorCode::BadParams, "need --mu0 and --t together with --p or --phi");
    csv << "mu0,t,mu\n";
    for (const double mu0 : a.mu0)
      for (const double t : a.t) {
        const double mu = a.p ? gfol::closed_form_mu(mu0, *a.p, t)
                              : gfol::comparison_closed_form(mu0, a.alpha, *a.phi, t);
        std::cout << "mu0 = " << format_g12(mu0) << "  t = " << format_g12(t)
                  << "  mu = " << format_g12(mu) << "\n";
        csv << format_g12(mu0) << "," << format_g12(t) << "," << format_g12(mu) << "\n";
      }
  } else {
    gfol::fail(ErrorCode::BadParams,
               "pick a mode: --p or --phi with --mu0/--t, or --psi1/--psi2 [--stationary]");
  }

  if (!a.csv_path.empty()) {
    if (csv.str().empty())
      gfol::fail(ErrorCode::BadParams, "--csv needs a table mode, not --stationary alone");
    write_file(a.csv_path, csv.str());
    outputs.push_back(a.csv_path);
    std::cout << "wrote " << a.csv_path << "\n";
  }
  if (!a.manifest_path.empty()) {
    gfol::RunManifest m;
    m.command = "closed-form";
    m.config = {{"mu0", a.mu0},
                {"p", a.p ? Json(*a.p) : Json()},
                {"phi", a.phi ? Json(*a.phi) : Json()},
                {"alpha", a.alpha},
                {"t", a.t},
                {"psi1", a.psi1 ? Json(*a.psi1) : Json()},
                {"psi2", a.psi2 ? Json(*a.psi2) : Json()},
                {"stationary", a.stationary},
                {"t_end", a.t_end ? Json(*a.t_end) : Json()},
                {"dt", a.dt}};
    m.outputs = outputs;
    finish_manifest(m, a.manifest_path);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gfol: weak metric structures and partial Ricci flow on foliation models"};
  app.require_subcommand(1);

  bool models_json = false;
  auto* models = app.add_subcommand("models", "list built-in model families");
  models->add_flag("--json", models_json, "machine-readable listing");

  VerifyArgs verify_args;
  auto* verify = app.add_subcommand("verify", "classify a structure and check its axioms");
  verify_args.source.attach(verify);
  verify->add_option("--kind", verify_args.kind, "structure kind (contact|p_contact|f_structure|para_phi)");
  verify->add_option("--expect", verify_args.expect, "label or slug that must be reached (exit 1 otherwise)");
  verify->add_option("--json", verify_args.json_path, "write the classification report to this file");
  verify->add_option("--manifest", verify_args.manifest_path, "write a run manifest to this file");

  GeometryArgs geom_args;
  auto* geometry = app.add_subcommand("geometry", "connection, curvature, and partial Ricci report");
  geom_args.source.attach(geometry);
  geometry->add_option("--json", geom_args.json_path, "write the full geometry report to this file");
  geometry->add_option("--manifest", geom_args.manifest_path, "write a run manifest to this file");

  FlowArgs flow_args;
  auto* flow = app.add_subcommand("flow", "integrate the partial Ricci flow backward");
  flow_args.source.attach(flow);
  flow->add_option("--phi", flow_args.phi, "normalization constant (> 0)");
  flow->add_option("--t-end", flow_args.t_end, "backward horizon (< 0); use --t-end=-5 syntax");
  flow->add_option("--dt", flow_args.dt, "RK4 step, in (0, 1e-2]");
  flow->add_option("--record-every", flow_args.record_every, "sample stride in steps");
  flow->add_option("--tol", flow_args.tol, "convergence tolerance on |Ric - phi id|");
  flow->add_option("--kind", flow_args.kind, "structure kind for the retraction context");
  flow->add_flag("--retract", flow_args.retract, "verify the deformation retraction at the limit");
  flow->add_option("--sweep", flow_args.sweep, "comma-separated phi list; runs fan out concurrently")
      ->delimiter(',');
  flow->add_option("--csv", flow_args.csv_path, "write the trajectory CSV to this file");
  flow->add_option("--json", flow_args.json_path, "write the trajectory JSON to this file");
  flow->add_option("--manifest", flow_args.manifest_path, "write a run manifest to this file");

  ClosedFormArgs cf_args;
  auto* closed = app.add_subcommand("closed-form", "evaluate the closed-form solutions");
  closed->add_option("--mu0", cf_args.mu0, "initial eigenvalues (comma-separated)")->delimiter(',');
  auto* opt_p = closed->add_option("--p", cf_args.p, "number of characteristic fields");
  closed->add_option("--phi", cf_args.phi, "normalization constant for the comparison solution")
      ->excludes(opt_p);
  closed->add_option("--alpha", cf_args.alpha, "comparison drift term");
  closed->add_option("--t", cf_args.t, "evaluation times (use --t=-0.5,-1 syntax)")->delimiter(',');
  closed->add_option("--psi1", cf_args.psi1, "scalar recurrence coefficient");
  closed->add_option("--psi2", cf_args.psi2, "scalar recurrence coefficient (>= 0)");
  closed->add_flag("--stationary", cf_args.stationary, "print the stationary points mu+-");
  closed->add_option("--t-end", cf_args.t_end, "scalar run horizon (< 0)");
  closed->add_option("--dt", cf_args.dt, "scalar run RK4 step");
  closed->add_option("--csv", cf_args.csv_path, "write the evaluation table to this file");
  closed->add_option("--manifest", cf_args.manifest_path, "write a run manifest to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 64;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 65;
  }

  try {
    if (models->parsed()) return cmd_models(models_json);
    if (verify->parsed()) return cmd_verify(verify_args);
    if (geometry->parsed()) return cmd_geometry(geom_args);
    if (flow->parsed()) return cmd_flow(flow_args);
    if (closed->parsed()) return cmd_closed_form(cf_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 65;
  }
  return 0;
}
