#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kBin = KORADIAL_BIN;
const fs::path kCatalog = KORADIAL_CATALOG;

fs::path scratch(const std::string& name) {
  fs::path p = fs::path(KORADIAL_SCRATCH) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args, const std::string& env = "") {
  std::string cmd = env + (env.empty() ? "" : " ") + "'" + kBin.string() + "' " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string config(const std::string& name) { return "'" + (kCatalog / (name + ".toml")).string() + "'"; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json load(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

}  // namespace

TEST_CASE("catalog classification through the command line") {
  const std::pair<const char*, const char*> expect[] = {
      {"power-large", "I"}, {"power-bounded", "F"}, {"semifinite-1", "SF1"}, {"semifinite-2", "SF2"},
      {"manufactured", "I"}};
  for (auto [name, kind] : expect) {
    fs::path out = scratch(std::string("classify-") + name);
    CHECK(run("classify " + config(name) + " --out '" + out.string() + "'") == 0);
    auto j = load(out / "classify.json");
    CHECK(j["classify"]["class"]["kind"] == kind);
    CHECK(j["classify"]["gate"]["regime"] == "classification");
    CHECK(j["exit_code"] == 0);
  }
  fs::path out = scratch("classify-zero");
  CHECK(run("classify " + config("zero-weights") + " --out '" + out.string() + "'") == 0);
  CHECK(load(out / "classify.json")["classify"]["gate"]["regime"] == "bounded");
}

TEST_CASE("every catalog entry reports cleanly") {
  for (const char* name : {"power-large", "power-bounded", "semifinite-1", "semifinite-2", "manufactured",
                           "zero-weights"}) {
    fs::path out = scratch(std::string("report-") + name);
    INFO(name);
    CHECK(run("report " + config(name) + " --out '" + out.string() + "'") == 0);
    auto j = load(out / "report.json");
    CHECK(j["solve"]["converged"] == true);
    CHECK(j["audit"]["pass"] == true);
    CHECK(j["bounds"]["pass"] == true);
    CHECK(fs::exists(out / "solution.csv"));
    CHECK(fs::exists(out / "functional_P3.csv"));
    CHECK(fs::exists(out / "functional_H2.csv"));
  }
}

TEST_CASE("exit codes") {
  fs::path out = scratch("codes");
  const std::string o = " --out '" + out.string() + "'";
  CHECK(run("check " + config("manufactured") + " --set 'problem.f1=x^'" + o) == 1);
  CHECK(run("check " + config("manufactured") + " --set 'problem.f1=1+x'" + o) == 2);
  CHECK(run("check /nonexistent.toml" + o) == 1);
  CHECK(run("frobnicate " + config("manufactured")) == 1);
  CHECK(run("solve " + config("manufactured") + " --set numerics.bogus=1" + o) == 1);
  CHECK(run("classify " + config("power-bounded") + " --set numerics.doublings=5" + o) == 3);
  CHECK(run("solve " + config("power-large") + " --set numerics.max_iter=2" + o) == 4);
  CHECK(run("solve " + config("power-large") + " --set problem.f1=x^2 --set problem.f2=x^2" + o) == 5);
  auto m = load(out / "manifest.json");
  CHECK(m["solve"]["status"] == "blow_up");
  CHECK(m["solve"]["blowup_radius"].is_number());
}

TEST_CASE("bounds on a stored solution") {
  fs::path out = scratch("stored");
  const std::string o = " --out '" + out.string() + "'";
  REQUIRE(run("solve " + config("manufactured") + o) == 0);
  const fs::path csv = out / "solution.csv";
  CHECK(run("bounds " + config("manufactured") + " --solution '" + csv.string() + "'" + o) == 0);
  CHECK(fs::exists(out / "bounds.csv"));

  // Same radii, a value pushed below the central value: bounds violated.
  std::string text = slurp(csv);
  std::istringstream in(text);
  std::ostringstream bad;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    if (row++ == 40) line = line.substr(0, line.find(',')) + ",0.5,2";
    bad << line << "\n";
  }
  fs::path corrupt = out / "corrupt.csv";
  std::ofstream(corrupt) << bad.str();
  CHECK(run("bounds " + config("manufactured") + " --solution '" + corrupt.string() + "'" + o) == 6);

  // A solution on another grid, or an unreadable row, is a configuration error.
  CHECK(run("bounds " + config("manufactured") + " --set numerics.R_max=5 --solution '" + csv.string() + "'" + o) ==
        1);
  std::ofstream(out / "garbage.csv") << "r,u1,u2\n0,1,x\n";
  CHECK(run("bounds " + config("manufactured") + " --solution '" + (out / "garbage.csv").string() + "'" + o) == 1);
}

TEST_CASE("outputs are deterministic and independent of the thread cap") {
  fs::path a = scratch("det-a"), b = scratch("det-b");
  REQUIRE(run("report " + config("semifinite-1") + " --out '" + a.string() + "'") == 0);
  REQUIRE(run("report " + config("semifinite-1") + " --out '" + b.string() + "'", "KORADIAL_THREADS=1") == 0);
  for (const char* f : {"report.json", "solution.csv", "bounds.csv", "functional_P1.csv", "functional_H1.csv"}) {
    INFO(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }
}

TEST_CASE("parameter overrides change the fingerprint") {
  fs::path a = scratch("fp-a"), b = scratch("fp-b");
  REQUIRE(run("solve " + config("power-large") + " --out '" + a.string() + "'") == 0);
  REQUIRE(run("solve " + config("power-large") + " --set alpha=0.6 --out '" + b.string() + "'") == 0);
  CHECK(load(a / "manifest.json")["problem"]["fingerprint"] != load(b / "manifest.json")["problem"]["fingerprint"]);
  CHECK(load(b / "manifest.json")["problem"]["parameters"]["alpha"] == 0.6);
}

TEST_CASE("repeated overrides all apply") {
  fs::path a = scratch("multi-set");
  REQUIRE(run("solve " + config("power-large") + " --set alpha=0.6 --set numerics.R_max=20 --set beta=0.7 --out '" +
              a.string() + "'") == 0);
  auto m = load(a / "manifest.json");
  CHECK(m["problem"]["parameters"]["alpha"] == 0.6);
  CHECK(m["problem"]["parameters"]["beta"] == 0.7);
  CHECK(m["solve"]["grid"]["R_max"] == 20.0);
}
