#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "koradial/classify.hpp"
#include "koradial/problem.hpp"
#include "koradial/solver.hpp"

namespace koradial {

/// Bad or incomplete configuration; the message carries origin and line.
class ConfigError : public Error {
 public:
  using Error::Error;
};

namespace toml {

/// Subset: [section] headers, key = value lines, # comments. Values are
/// basic or literal strings, booleans, integers and floats.
struct Value {
  std::variant<std::string, double, bool> data;
  bool integer = false;  // the literal had no fraction or exponent
  int line = 0;

  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_number() const { return std::holds_alternative<double>(data); }
  bool is_bool() const { return std::holds_alternative<bool>(data); }
};

using Table = std::map<std::string, Value, std::less<>>;
using Document = std::map<std::string, Table, std::less<>>;  // "" holds keys before any header

Document parse(std::string_view text, const std::string& origin);

/// Parses a single value literal as it would appear on the right of '='.
/// Text that is not a valid literal is taken as a bare string.
Value parse_value_or_string(std::string_view text);

}  // namespace toml

struct NumericsConfig {
  SolveOptions solve;
  LimitOptions limits;
  WeightOptions weights;
  HypothesisOptions hypotheses;
  double ivp_h = 1e-3;
};

struct OutputConfig {
  std::string dir = "koradial-out";
  bool csv = true;
  bool json = true;
};

struct RunConfig {
  std::string origin;
  std::string name;
  ProblemSpec spec;
  expr::Bindings parameters;
  std::map<std::string, std::string> sources;  // function name -> expression text
  NumericsConfig numerics;
  OutputConfig output;
};

/// `--set` overrides: "name=value" sets a parameter, "section.key=value" any key.
RunConfig parse_config(std::string_view text, const std::string& origin, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

}  // namespace koradial
