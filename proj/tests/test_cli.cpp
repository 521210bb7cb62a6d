// End-to-end checks of the gfol binary: exit codes, output contract, file
// outputs, and manifest replay.  GFOL_CLI_PATH is injected by the build.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct CmdResult {
  int code = -1;
  std::string out;

  bool contains(const std::string& needle) const { return out.find(needle) != std::string::npos; }
};

CmdResult run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + GFOL_CLI_PATH + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CmdResult res;
  char buf[4096];
  size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) res.out.append(buf, n);
  const int rc = pclose(pipe);
  res.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return res;
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "gfol_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("models subcommand") {
  auto res = run("models");
  REQUIRE(res.code == 0);
  for (const char* fam : {"heisenberg", "quat_heisenberg", "s_model", "para_model", "su2"})
    REQUIRE(res.contains(fam));

  auto js = run("models --json");
  REQUIRE(js.code == 0);
  const Json listing = Json::parse(js.out);
  REQUIRE(listing.is_array());
  REQUIRE(listing.size() == 5);
  REQUIRE(listing[0]["family"] == "heisenberg");
  REQUIRE(listing[0].contains("kind"));

  REQUIRE(run("models --frobnicate").code == 64);
  REQUIRE(run("").code == 64);            // a subcommand is required
  REQUIRE(run("--help").code == 0);
  REQUIRE(run("frobnicate").code == 64);  // unknown subcommand
}

TEST_CASE("verify classifies builtins and honors --expect") {
  auto res = run("verify --builtin heisenberg:2,3");
  REQUIRE(res.code == 0);
  REQUIRE(res.contains("weak contact metric, non-normal"));
  REQUIRE(res.contains("classical: no"));

  REQUIRE(run("verify --builtin heisenberg:1 --expect sasakian-classical").code == 0);
  REQUIRE(run("verify --builtin heisenberg:1 --expect 'Sasakian (classical)'").code == 0);
  auto miss = run("verify --builtin heisenberg:2,3 --expect sasakian-classical");
  REQUIRE(miss.code == 1);
  REQUIRE(miss.contains("expectation failed"));

  REQUIRE(run("verify").code == 64);                                // no model source
  REQUIRE(run("verify --builtin su2 --model x.json").code == 64);   // both sources
  REQUIRE(run("verify --builtin frobnicate").code == 65);
  REQUIRE(run("verify --builtin heisenberg:2,3 --kind frob").code == 65);
  REQUIRE(run("verify --model /nonexistent/model.json").code == 65);
}

TEST_CASE("verify writes a json report") {
  const fs::path rep = scratch() / "verify_quat.json";
  auto res = run("verify --builtin quat_heisenberg:1 --kind p_contact --json " + rep.string());
  REQUIRE(res.code == 0);
  REQUIRE(res.contains("almost 3-contact metric (classical)"));

  const Json j = Json::parse(slurp(rep));
  REQUIRE(j["model"] == "quat_heisenberg:1");
  REQUIRE(j["kind"] == "p_contact");
  REQUIRE(j["classical"] == true);
  REQUIRE(j["residuals"]["EQ0p"].get<double>() <= 1e-12);
}

TEST_CASE("geometry subcommand reports both ricci routes") {
  const fs::path rep = scratch() / "geom_h23.json";
  auto res = run("geometry --builtin heisenberg:2,3 --json " + rep.string());
  REQUIRE(res.code == 0);
  REQUIRE(res.contains("discrepancy"));

  const Json j = Json::parse(slurp(rep));
  const auto ric = j["ric_perp"].get<std::vector<double>>();
  REQUIRE(ric.size() == 16);
  REQUIRE(ric[0] == 4.0);
  REQUIRE(ric[5] == 4.0);
  REQUIRE(ric[10] == 9.0);
  REQUIRE(ric[15] == 9.0);
  REQUIRE(j["ric_perp_algebraic"] == j["ric_perp"]);
  REQUIRE(j["discrepancy"].get<double>() <= 1e-12);

  const fs::path rep2 = scratch() / "geom_su2.json";
  REQUIRE(run("geometry --builtin su2 --json " + rep2.string()).code == 0);
  const Json j2 = Json::parse(slurp(rep2));
  REQUIRE(j2["ric_perp"] == Json({1.0, 0.0, 0.0, 1.0}));
}

TEST_CASE("geometry on an abelian model file is flat") {
  const fs::path model = scratch() / "abelian3.json";
  spit(model, R"({"name":"abelian3","dim":3,"vertical":[2],
                  "frame":["e1","e2","xi"],"brackets":[],"metric":"identity"})");
  const fs::path rep = scratch() / "geom_abelian.json";
  auto res = run("geometry --model " + model.string() + " --json " + rep.string());
  REQUIRE(res.code == 0);
  const Json j = Json::parse(slurp(rep));
  REQUIRE(j["ric_perp"] == Json({0.0, 0.0, 0.0, 0.0}));
  REQUIRE(j["r_g"] == Json({0.0, 0.0, 0.0, 0.0}));

  const fs::path bad = scratch() / "bad.json";
  spit(bad, "{not json");
  REQUIRE(run("geometry --model " + bad.string()).code == 65);
  spit(bad, R"({"name":"x","dim":3,"vertical":[2],"frame":["a","b","c"],
                "brackets":[],"metric":"identity","frobnicate":1})");
  REQUIRE(run("geometry --model " + bad.string()).code == 65);
}

TEST_CASE("flow on a fixed point converges immediately") {
  auto res = run("flow --builtin su2");
  REQUIRE(res.code == 0);
  REQUIRE(res.contains("converged: yes"));
  REQUIRE(res.contains("rate: n/a"));
}

TEST_CASE("flow full run writes trajectory files and a manifest") {
  const fs::path csv = scratch() / "h23.csv";
  const fs::path traj = scratch() / "h23.json";
  const fs::path man = scratch() / "h23_manifest.json";
  auto res = run("flow --builtin heisenberg:2,3 --phi 1 --t-end=-5 --dt 1e-3 --retract --csv " +
                 csv.string() + " --json " + traj.string() + " --manifest " + man.string());
  REQUIRE(res.code == 0);
  REQUIRE(res.contains("converged: yes"));
  REQUIRE(res.contains("rate: 4.000"));
  REQUIRE(res.contains("at t_end: weak contact metric, non-normal"));
  REQUIRE(res.contains("at limit: Sasakian (classical)"));

  const std::string csv_text = slurp(csv);
  REQUIRE(csv_text.substr(0, csv_text.find('\n')) ==
          "t,mu_1,mu_2,mu_3,mu_4,res_ode,res_tsharp,res_commutator,res_compat");

  const Json tj = Json::parse(slurp(traj));
  REQUIRE(tj["model"] == "heisenberg:2,3");
  REQUIRE(tj["converged"] == true);
  REQUIRE(tj["samples"].size() == 501);

  const Json mj = Json::parse(slurp(man));
  REQUIRE(mj["command"] == "flow");
  REQUIRE(mj["inputs"]["builtin"] == "heisenberg:2,3");
  REQUIRE(mj["config"]["phi"] == 1.0);
  REQUIRE(mj["config"]["retract"] == true);
  REQUIRE(mj["outputs"].size() == 2);
  REQUIRE(mj.contains("seed"));
  REQUIRE(mj["timestamp"].get<std::string>().size() == 20);

  // replaying the same invocation reproduces the trajectory bit-exactly
  const fs::path csv2 = scratch() / "h23_replay.csv";
  auto res2 = run("flow --builtin " + mj["inputs"]["builtin"].get<std::string>() +
                  " --phi 1 --t-end=-5 --dt 1e-3 --retract --csv " + csv2.string());
  REQUIRE(res2.code == 0);
  REQUIRE(slurp(csv2) == csv_text);
}

TEST_CASE("flow exit codes distinguish outcomes") {
  auto short_run = run("flow --builtin heisenberg:2,3 --t-end=-0.5");
  REQUIRE(short_run.code == 2);
  REQUIRE(short_run.contains("converged: no"));

  REQUIRE(run("flow --builtin para_model:2,2").code == 65);        // indefinite metric
  REQUIRE(run("flow --builtin heisenberg:2,3 --t-end=1").code == 65);  // hits the pole
  REQUIRE(run("flow --builtin heisenberg:2,3 --dt 0.5").code == 65);
  REQUIRE(run("flow --builtin heisenberg:2,3 --phi 0").code == 65);
  REQUIRE(run("flow --frobnicate").code == 64);
}

TEST_CASE("flow sweep fans out runs with distinct outputs") {
  const fs::path csv = scratch() / "sweep.csv";
  const fs::path man = scratch() / "sweep_manifest.json";
  auto res = run("flow --builtin su2 --sweep 0.5,1 --t-end=-10 --csv " + csv.string() +
                 " --manifest " + man.string());
  REQUIRE(res.code == 0);
  REQUIRE(res.contains("phi: 0.5"));
  REQUIRE(res.contains("phi: 1"));

  const fs::path csv_a = scratch() / "sweep_phi0.5.csv";
  const fs::path csv_b = scratch() / "sweep_phi1.csv";
  REQUIRE(fs::exists(csv_a));
  REQUIRE(fs::exists(csv_b));
  REQUIRE(slurp(csv_a) != slurp(csv_b));

  const Json mj = Json::parse(slurp(man));
  REQUIRE(mj["config"]["sweep"] == Json({0.5, 1.0}));
  REQUIRE(mj["outputs"].size() == 2);
}

TEST_CASE("closed-form evaluations match the frozen oracles") {
  auto ev = run("closed-form --mu0 4 --p 1 --t=-0.5");
  REQUIRE(ev.code == 0);
  REQUIRE(ev.contains("1.11296786604"));

  auto cmp = run("closed-form --mu0 1 --phi 1 --alpha 0 --t=-1");
  REQUIRE(cmp.code == 0);
  REQUIRE(cmp.contains("1.96402758008"));

  auto st = run("closed-form --psi1 0 --psi2 4 --stationary");
  REQUIRE(st.code == 0);
  REQUIRE(st.contains("mu_plus: 1"));
  REQUIRE(st.contains("mu_minus: -1"));

  const fs::path csv = scratch() / "cf.csv";
  auto tab = run("closed-form --mu0 4,9 --p 1 --t=-0.5,-1 --csv " + csv.string());
  REQUIRE(tab.code == 0);
  const std::string text = slurp(csv);
  REQUIRE(text.substr(0, text.find('\n')) == "mu0,t,mu");
  REQUIRE(std::count(text.begin(), text.end(), '\n') == 5);  // header + 4 rows
}

TEST_CASE("closed-form input errors exit 65") {
  REQUIRE(run("closed-form --mu0 0 --p 1 --t=-1").code == 65);
  REQUIRE(run("closed-form --mu0 3 --p 0 --t=-1").code == 65);
  REQUIRE(run("closed-form --mu0 3 --p 1 --t 1000000").code == 65);  // past the pole
  REQUIRE(run("closed-form --psi1 0 --psi2=-1 --stationary").code == 65);
  REQUIRE(run("closed-form").code == 65);                            // no mode picked
  REQUIRE(run("closed-form --mu0 2 --p 1 --phi 1 --t=-1").code == 64);  // exclusive flags
}

TEST_CASE("GFOL_SEED overrides the manifest seed") {
  const fs::path man = scratch() / "seeded_manifest.json";
  auto res = run("verify --builtin su2 --manifest " + man.string(), "GFOL_SEED=7");
  REQUIRE(res.code == 0);
  REQUIRE(Json::parse(slurp(man))["seed"] == 7);

  REQUIRE(run("verify --builtin su2 --manifest " + man.string(), "GFOL_SEED=frob").code == 65);
}

TEST_CASE("embedded structure blocks flow through verify") {
  const fs::path model = scratch() / "su2_contact.json";
  spit(model, R"({"name":"su2-file","dim":3,"vertical":[2],
                  "frame":["e1","e2","xi"],
                  "brackets":[{"i":0,"j":1,"coeffs":{"2":2.0}},
                              {"i":1,"j":2,"coeffs":{"0":2.0}},
                              {"i":0,"j":2,"coeffs":{"1":-2.0}}],
                  "metric":"identity",
                  "structure":{"kind":"contact",
                               "phi":[0,-1,0, 1,0,0, 0,0,0],
                               "xis":[2]}})");
  auto res = run("verify --model " + model.string() + " --expect sasakian-classical");
  REQUIRE(res.code == 0);
  REQUIRE(run("verify --model " + model.string() + " --kind f_structure").code == 65);
}
