#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "helpers.hpp"
#include "zoflow/bound.hpp"
#include "zoflow/config.hpp"

using namespace zoflow;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "zoflow");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path tmp_root() {
  const char* env = std::getenv("ZOFLOW_TEST_TMP");
  fs::path p = env ? fs::path(env) : fs::temp_directory_path() / "zoflow-cli-test";
  fs::create_directories(p);
  return p;
}

fs::path write_config(const std::string& name, const json& doc) {
  const auto p = tmp_root() / name;
  std::ofstream(p) << doc.dump(2);
  return p;
}

std::string config(const std::string& name) { return zt::source_path("configs/" + name); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double parse_after(const std::string& text, const std::string& label) {
  const auto pos = text.find(label);
  REQUIRE(pos != std::string::npos);
  return std::stod(text.substr(pos + label.size()));
}

json scalar_affine(double a, std::size_t steps) {
  return {{"schema_version", 1},
          {"dim", 1},
          {"backend", "affine"},
          {"schedule", {{"steps", steps}}},
          {"conditions", {{"lin", {{"affine", {{"a", a}}}}}}},
          {"bound", {{"realizations", 50}}}};
}

}  // namespace

TEST_CASE("bound on the identity config prints two") {
  const auto r = invoke({"bound", "-c", config("identity.json"), "-o", (tmp_root() / "id-bound").string(), "-q"});
  CHECK(r.code == cli::kOk);
  CHECK(parse_after(r.out, "bound (2 x min ratio): ") == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(parse_after(r.out, "suggested eta: ") == doctest::Approx(1.8).epsilon(1e-12));
  CHECK(fs::exists(tmp_root() / "id-bound" / "bound.json"));
  CHECK(fs::exists(tmp_root() / "id-bound" / "alpha_curve.csv"));
}

TEST_CASE("bound on the affine d = 8 config is within 5% of the closed form") {
  const auto r = invoke({"bound", "-c", config("affine_d8.json"), "-o", (tmp_root() / "d8-bound").string(), "-q"});
  REQUIRE(r.code == cli::kOk);
  const auto sc = load_scenario(config("affine_d8.json"));
  const auto& field = std::get<AffineField>(sc.conditions.at(sc.source).payload);
  const double exact = affine_bound_exact(affine_flow_map(field, std::get<FlowSchedule>(sc.schedule)).M);
  const double est = parse_after(r.out, "bound (2 x min ratio): ");
  CHECK(est >= exact * (1 - 1e-9));
  CHECK(est <= 1.05 * exact);
}

TEST_CASE("usage and config errors") {
  CHECK(invoke({}).code == cli::kUsage);
  CHECK(invoke({"run"}).code == cli::kUsage);
  CHECK(invoke({"run", "-c", (tmp_root() / "nope.json").string()}).code == cli::kUsage);
  CHECK(invoke({"frobnicate"}).code == cli::kUsage);
  CHECK(invoke({"--help"}).code == cli::kOk);

  json bad = scalar_affine(1.0, 10);
  bad["experiment"] = {{"task", "inversion"}, {"eta", -1.0}};
  const auto r = invoke({"run", "-c", write_config("bad.json", bad).string(), "-q"});
  CHECK(r.code == cli::kConfig);
  CHECK(r.err.find("experiment") != std::string::npos);

  json same = json::parse(slurp(config("mixture_edit.json")), nullptr, true, true);
  same["target"] = same["source"];
  const auto e = invoke({"edit", "-c", write_config("same.json", same).string(), "-o",
                         (tmp_root() / "same-edit").string(), "-q"});
  CHECK(e.code == cli::kConfig);
}

TEST_CASE("sweep labels 0.9x converged and 5x diverged") {
  const auto dir = tmp_root() / "d8-sweep";
  const auto r = invoke({"sweep", "-c", config("affine_d8.json"), "-o", dir.string(), "-q"});
  REQUIRE(r.code == cli::kOk);
  const std::string csv = slurp(dir / "convergence.csv");
  CHECK(csv.rfind("# zoflow-csv schema=1 kind=convergence\n", 0) == 0);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  std::map<double, std::set<std::string>> status;
  while (std::getline(in, line)) {
    const auto last = line.rfind(',');
    status[std::stod(line.substr(0, line.find(',')))].insert(line.substr(last + 1));
  }
  REQUIRE(status.size() == 2);
  CHECK(status.begin()->second == std::set<std::string>{"converged"});
  CHECK(status.rbegin()->second == std::set<std::string>{"diverged"});
}

TEST_CASE("outputs are identical across reruns and worker counts") {
  const auto a = tmp_root() / "rerun-a", b = tmp_root() / "rerun-b", c = tmp_root() / "rerun-c";
  json doc = json::parse(slurp(config("mixture_inversion.json")), nullptr, true, true);
  doc["experiment"]["num_seeds"] = 4;
  doc["experiment"]["iterations"] = {5, 10};
  doc["bound"]["realizations"] = 200;
  const auto cfg = write_config("rerun.json", doc).string();
  REQUIRE(invoke({"invert", "-c", cfg, "-o", a.string(), "-q"}).code == cli::kOk);
  REQUIRE(invoke({"invert", "-c", cfg, "-o", b.string(), "-q"}).code == cli::kOk);
  REQUIRE(invoke({"invert", "-c", cfg, "-o", c.string(), "-q", "-j", "3"}).code == cli::kOk);
  for (const char* f : {"rows.csv", "summary.csv", "summary.json", "bound.json", "alpha_curve.csv"}) {
    CAPTURE(f);
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK(slurp(a / f) == slurp(c / f));
  }
  const auto d = tmp_root() / "rerun-seed";
  REQUIRE(invoke({"invert", "-c", cfg, "-o", d.string(), "-q", "--seed", "100"}).code == cli::kOk);
  CHECK(slurp(a / "rows.csv") != slurp(d / "rows.csv"));
}

TEST_CASE("divergence exits with its own code and keeps traces") {
  json doc = scalar_affine(1.0, 10);
  doc["experiment"] = {{"task", "inversion"}, {"eta", 50.0}, {"iterations", {40}}, {"init", "random"}};
  const auto dir = tmp_root() / "diverge";
  fs::remove_all(dir);
  const auto r = invoke({"run", "-c", write_config("diverge.json", doc).string(), "-o", dir.string(), "-q"});
  CHECK(r.code == cli::kDivergence);
  CHECK(r.err.find("divergence") != std::string::npos);
  CHECK(fs::exists(dir / "traces" / "trace_0.csv"));
  CHECK(fs::exists(dir / "traces" / "trace_0.json"));
  CHECK(fs::exists(dir / "rows.csv"));
}

TEST_CASE("bound assumption violation exits with its own code") {
  // One Euler step with a = 2 maps u to -u.
  const auto dir = tmp_root() / "assumption";
  const auto r = invoke({"bound", "-c", write_config("flip.json", scalar_affine(2.0, 1)).string(), "-o",
                         dir.string(), "-q"});
  CHECK(r.code == cli::kAssumption);
  CHECK(fs::exists(dir / "bound.json"));
}

TEST_CASE("selftest passes and the corrupted schedule hook fails it") {
  const auto ok = invoke({"selftest", "-q"});
  CHECK(ok.code == cli::kOk);
  const auto bad = invoke({"selftest", "-q", "--inject-corrupt-schedule"});
  CHECK(bad.code == cli::kContract);
  CHECK(bad.out.find("ddim-telescoping") != std::string::npos);
}

TEST_CASE("default output directory honours the environment") {
  const auto root = tmp_root() / "env-root";
  fs::remove_all(root);
  ::setenv("ZOFLOW_OUTPUT_ROOT", root.c_str(), 1);
  const auto r = invoke({"bound", "-c", config("identity.json"), "-q"});
  ::unsetenv("ZOFLOW_OUTPUT_ROOT");
  CHECK(r.code == cli::kOk);
  CHECK(fs::exists(root / "identity-bound" / "bound.json"));
}
