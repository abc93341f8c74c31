#include <doctest.h>

#include <string>

#include "koradial/config.hpp"

using namespace koradial;

namespace {

const char* kBase = R"toml(# comment line
name = "demo"

[parameters]
alpha = 0.5
beta = 1_000e-3   # underscores are allowed in numbers

[problem]
N = 3
a = "2*alpha"
b = 1
p1 = "(1+x)^(-4)"
p2 = 1
f1 = "x^alpha"
f2 = 'x^beta'

[numerics]
R_max = 20
n_panels = 16

[output]
dir = "somewhere"
formats = "csv"
)toml";

std::string error_of(const std::string& text, const std::vector<std::string>& sets = {}) {
  try {
    parse_config(text, "cfg.toml", sets);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string with(const std::string& extra_problem_line) {
  std::string s = kBase;
  auto at = s.find("[numerics]");
  return s.insert(at, extra_problem_line + "\n\n");
}

}  // namespace

TEST_CASE("toml subset values") {
  auto doc = toml::parse("k1 = 3\nk2 = -2.5e1\nk3 = true\nk4 = \"a\\\"b\\n\"\nk5 = 'raw\\n'\n[s]\nk = +7 # c\n", "t");
  CHECK(std::get<double>(doc[""]["k1"].data) == 3);
  CHECK(doc[""]["k1"].integer);
  CHECK(std::get<double>(doc[""]["k2"].data) == -25);
  CHECK_FALSE(doc[""]["k2"].integer);
  CHECK(std::get<bool>(doc[""]["k3"].data));
  CHECK(std::get<std::string>(doc[""]["k4"].data) == "a\"b\n");
  CHECK(std::get<std::string>(doc[""]["k5"].data) == "raw\\n");
  CHECK(std::get<double>(doc["s"]["k"].data) == 7);
  CHECK(doc["s"]["k"].line == 7);
  CHECK(toml::parse_value_or_string("x^2").is_string());
  CHECK(toml::parse_value_or_string("2.5").is_number());
}

TEST_CASE("toml subset errors carry the line") {
  auto err = [](const char* text) {
    try {
      toml::parse(text, "t");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(err("a = 1\na = 2\n").find("t:2:") == 0);
  CHECK(err("[x]\n[x]\n").find("t:2:") == 0);
  CHECK(err("a = [1, 2]\n").find("arrays") != std::string::npos);
  CHECK(err("a = \"open\n").find("unterminated") != std::string::npos);
  CHECK(err("a = 1 2\n") != "");
  CHECK(err("= 1\n") != "");
  CHECK(err("[sec\n") != "");
}

TEST_CASE("a complete configuration") {
  RunConfig c = parse_config(kBase, "cfg.toml");
  CHECK(c.name == "demo");
  CHECK(c.spec.N == 3);
  CHECK(c.spec.a == 1.0);
  CHECK(c.spec.b == 1.0);
  CHECK(c.spec.f1(4) == doctest::Approx(2));
  CHECK(c.spec.f2(4) == doctest::Approx(4));
  CHECK(c.spec.p2(17) == 1);
  // Unset h and w default to f of the same index.
  CHECK(c.spec.h1(9) == doctest::Approx(3));
  CHECK(c.spec.w2(9) == doctest::Approx(9));
  CHECK(c.spec.cbar1 == 1);
  CHECK(c.spec.eps == 0.5);
  CHECK(c.numerics.solve.R_max == 20);
  CHECK(c.numerics.solve.panels == 16);
  CHECK(c.output.dir == "somewhere");
  CHECK(c.output.csv);
  CHECK_FALSE(c.output.json);
  CHECK(c.sources.at("f1") == "x^alpha");
  CHECK(c.parameters.at("beta") == 1.0);
}

TEST_CASE("overrides") {
  RunConfig c = parse_config(kBase, "cfg.toml", {"alpha=0.25", "numerics.R_max=5", "problem.p2=2*x+1"});
  CHECK(c.spec.f1(16) == doctest::Approx(2));
  CHECK(c.spec.a == 0.5);
  CHECK(c.numerics.solve.R_max == 5);
  CHECK(c.spec.p2(1) == 3);
  CHECK(c.spec.fingerprint() != parse_config(kBase, "cfg.toml").spec.fingerprint());
  CHECK(error_of(kBase, {"alpha"}) != "");
  CHECK(error_of(kBase, {"alpha=x"}).find("numbers") != std::string::npos);
  CHECK(error_of(kBase, {"numerics.bogus=1"}).find("bogus") != std::string::npos);
}

TEST_CASE("configuration errors") {
  CHECK(error_of(with("eps = 0")).find("eps") != std::string::npos);
  CHECK(error_of(with("cbar9 = 1")).find("cfg.toml:") == 0);
  CHECK(error_of(with("h1 = \"x^\"")).find("h1") != std::string::npos);
  CHECK(error_of(std::string(kBase) + "[extra]\nk = 1\n").find("extra") != std::string::npos);
  CHECK(error_of(std::string(kBase) + "").empty());

  std::string no_f2 = kBase;
  no_f2.erase(no_f2.find("f2 = "), std::string("f2 = 'x^beta'\n").size());
  CHECK(error_of(no_f2).find("f2") != std::string::npos);

  std::string dim = kBase;
  dim.replace(dim.find("N = 3"), 5, "N = 2");
  CHECK(error_of(dim).find("dimension") != std::string::npos);

  std::string frac = kBase;
  frac.replace(frac.find("N = 3"), 5, "N = 3.5");
  CHECK(error_of(frac).find("N") != std::string::npos);

  CHECK(error_of(kBase, {"numerics.nodes_per_panel=4"}).find("nodes_per_panel") != std::string::npos);
  CHECK(error_of(kBase, {"numerics.doublings=500"}).find("doublings") != std::string::npos);
  CHECK(error_of(kBase, {"output.formats=xml"}).find("xml") != std::string::npos);
  CHECK(error_of(kBase, {"problem.f1=zeta(x)"}).find("zeta") != std::string::npos);
}

TEST_CASE("loading from disk names the file") {
  CHECK_THROWS_AS(load_config("/nonexistent/koradial.toml"), ConfigError);
}
