#include "koradial/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <fstream>
#include <set>
#include <sstream>

namespace koradial {

namespace toml {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool bare_key_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
  throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
}

// Parses a value starting at s; returns the number of characters consumed.
// Throws std::string with a message on malformed input.
std::size_t parse_literal(std::string_view s, Value& out) {
  if (s.empty()) throw std::string("missing value");
  if (s.front() == '"') {
    std::string v;
    for (std::size_t i = 1; i < s.size(); ++i) {
      char c = s[i];
      if (c == '"') {
        out.data = std::move(v);
        return i + 1;
      }
      if (c == '\\') {
        if (++i >= s.size()) break;
        switch (s[i]) {
          case 'n': v += '\n'; break;
          case 't': v += '\t'; break;
          case '"': v += '"'; break;
          case '\\': v += '\\'; break;
          default: throw std::string("unsupported escape \\") + s[i];
        }
        continue;
      }
      v += c;
    }
    throw std::string("unterminated string");
  }
  if (s.front() == '\'') {
    auto end = s.find('\'', 1);
    if (end == std::string_view::npos) throw std::string("unterminated string");
    out.data = std::string(s.substr(1, end - 1));
    return end + 1;
  }
  if (s.front() == '[' || s.front() == '{') throw std::string("arrays and inline tables are not supported");
  std::size_t end = 0;
  while (end < s.size() && s[end] != ' ' && s[end] != '\t' && s[end] != '#') ++end;
  std::string_view tok = s.substr(0, end);
  if (tok == "true" || tok == "false") {
    out.data = tok == "true";
    return end;
  }
  std::string digits;
  for (char c : tok) {
    if (c != '_') digits += c;
  }
  const char* b = digits.data();
  const char* e = b + digits.size();
  if (!digits.empty() && *b == '+') ++b;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || b == e) throw std::string("invalid value '") + std::string(tok) + "'";
  if (!std::isfinite(v)) throw std::string("non-finite number '") + std::string(tok) + "'";
  out.data = v;
  out.integer = digits.find_first_of(".eE") == std::string::npos;
  return end;
}

}  // namespace

Document parse(std::string_view text, const std::string& origin) {
  Document doc;
  doc[""];
  std::set<std::string> seen_headers;
  std::string section;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    if (line.front() == '[') {
      auto close = line.find(']');
      if (close == std::string_view::npos) fail(origin, lineno, "unterminated section header");
      std::string_view rest = trim(line.substr(close + 1));
      if (!rest.empty() && rest.front() != '#') fail(origin, lineno, "unexpected text after section header");
      std::string name(trim(line.substr(1, close - 1)));
      if (name.empty()) fail(origin, lineno, "empty section name");
      for (char c : name) {
        if (!bare_key_char(c) && c != '.') fail(origin, lineno, "invalid section name '" + name + "'");
      }
      if (!seen_headers.insert(name).second) fail(origin, lineno, "duplicate section [" + name + "]");
      section = name;
      doc[section];
      continue;
    }

    std::size_t k = 0;
    while (k < line.size() && bare_key_char(line[k])) ++k;
    if (k == 0) fail(origin, lineno, "expected key or section header");
    std::string key(line.substr(0, k));
    std::string_view rest = trim(line.substr(k));
    if (rest.empty() || rest.front() != '=') fail(origin, lineno, "expected '=' after key '" + key + "'");
    rest = trim(rest.substr(1));
    Value v;
    v.line = lineno;
    std::size_t used = 0;
    try {
      used = parse_literal(rest, v);
    } catch (const std::string& msg) {
      fail(origin, lineno, msg);
    }
    std::string_view tail = trim(rest.substr(used));
    if (!tail.empty() && tail.front() != '#') fail(origin, lineno, "unexpected text after value");
    Table& t = doc[section];
    if (t.count(key)) fail(origin, lineno, "duplicate key '" + key + "'");
    t.emplace(std::move(key), std::move(v));
  }
  return doc;
}

Value parse_value_or_string(std::string_view text) {
  text = trim(text);
  Value v;
  try {
    std::size_t used = parse_literal(text, v);
    if (trim(text.substr(used)).empty()) return v;
  } catch (const std::string&) {
  }
  v = Value{};
  v.data = std::string(text);
  return v;
}

}  // namespace toml

namespace {

class Reader {
 public:
  Reader(const toml::Document& doc, std::string origin) : doc_(doc), origin_(std::move(origin)) {}

  [[noreturn]] void fail(int line, const std::string& msg) const {
    if (line > 0) throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + msg);
    throw ConfigError(origin_ + ": " + msg);
  }

  const toml::Table* table(std::string_view name) const {
    auto it = doc_.find(name);
    return it == doc_.end() ? nullptr : &it->second;
  }

  void check_keys(std::string_view section, const std::set<std::string>& allowed) const {
    const toml::Table* t = table(section);
    if (!t) return;
    for (const auto& [key, v] : *t) {
      if (!allowed.count(key)) {
        fail(v.line, "unknown key '" + key + "' in " + (section.empty() ? std::string("top level") : "[" + std::string(section) + "]"));
      }
    }
  }

  const toml::Value* find(std::string_view section, std::string_view key) const {
    const toml::Table* t = table(section);
    if (!t) return nullptr;
    auto it = t->find(key);
    return it == t->end() ? nullptr : &it->second;
  }

  double number(std::string_view section, std::string_view key, double fallback) const {
    const toml::Value* v = find(section, key);
    if (!v) return fallback;
    if (!v->is_number()) fail(v->line, std::string(key) + " must be a number");
    return std::get<double>(v->data);
  }

  int integer(std::string_view section, std::string_view key, int fallback) const {
    const toml::Value* v = find(section, key);
    if (!v) return fallback;
    if (!v->is_number() || !v->integer) fail(v->line, std::string(key) + " must be an integer");
    double d = std::get<double>(v->data);
    if (std::abs(d) > 1e9) fail(v->line, std::string(key) + " is out of range");
    return static_cast<int>(d);
  }

  std::string string(std::string_view section, std::string_view key, const std::string& fallback) const {
    const toml::Value* v = find(section, key);
    if (!v) return fallback;
    if (!v->is_string()) fail(v->line, std::string(key) + " must be a string");
    return std::get<std::string>(v->data);
  }

  // A number, or an expression string evaluated with x = 0 under the parameters.
  double scalar(std::string_view key, const expr::Bindings& params, std::optional<double> fallback) const {
    const toml::Value* v = find("problem", key);
    if (!v) {
      if (fallback) return *fallback;
      fail(0, "missing required key problem." + std::string(key));
    }
    if (v->is_number()) return std::get<double>(v->data);
    if (!v->is_string()) fail(v->line, std::string(key) + " must be a number or an expression string");
    const auto& src = std::get<std::string>(v->data);
    try {
      double d = expr::evaluate(expr::parse(src), 0.0, params);
      if (!std::isfinite(d)) fail(v->line, std::string(key) + " evaluates to a non-finite value");
      return d;
    } catch (const expr::ParseError& e) {
      fail(v->line, std::string(key) + ": " + e.what());
    } catch (const expr::EvalError& e) {
      fail(v->line, std::string(key) + ": " + e.what());
    }
  }

  ScalarFn function(std::string_view key, const expr::Bindings& params, std::string& source) const {
    const toml::Value* v = find("problem", key);
    if (!v) fail(0, "missing required key problem." + std::string(key));
    if (v->is_number()) {
      double c = std::get<double>(v->data);
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", c);
      source = buf;
      return ScalarFn::constant(c);
    }
    if (!v->is_string()) fail(v->line, std::string(key) + " must be an expression string or a number");
    source = std::get<std::string>(v->data);
    try {
      return ScalarFn::from_source(source, params);
    } catch (const expr::ParseError& e) {
      fail(v->line, std::string(key) + ": " + e.what());
    } catch (const expr::EvalError& e) {
      fail(v->line, std::string(key) + ": " + e.what());
    }
  }

 private:
  const toml::Document& doc_;
  std::string origin_;
};

void apply_override(toml::Document& doc, const std::string& item) {
  auto eq = item.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set " + item + ": expected name=value");
  std::string name = item.substr(0, eq);
  std::string value = item.substr(eq + 1);
  auto dot = name.rfind('.');
  if (dot == std::string::npos) {
    toml::Value v = toml::parse_value_or_string(value);
    if (!v.is_number()) throw ConfigError("--set " + item + ": parameter values must be numbers");
    doc["parameters"][name] = v;
    return;
  }
  std::string section = name.substr(0, dot), key = name.substr(dot + 1);
  if (section.empty() || key.empty()) throw ConfigError("--set " + item + ": expected section.key=value");
  doc[section][key] = toml::parse_value_or_string(value);
}

template <class T>
void require(const Reader& r, bool ok, std::string_view key, const T& what) {
  if (!ok) r.fail(0, "numerics." + std::string(key) + " " + what);
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::string& origin, const std::vector<std::string>& overrides) {
  toml::Document doc = toml::parse(text, origin);
  for (const auto& o : overrides) apply_override(doc, o);
  Reader r(doc, origin);

  for (const auto& [name, t] : doc) {
    if (name != "" && name != "problem" && name != "parameters" && name != "numerics" && name != "output") {
      r.fail(t.empty() ? 0 : t.begin()->second.line, "unknown section [" + name + "]");
    }
  }
  r.check_keys("", {"name"});
  r.check_keys("problem", {"N", "a", "b", "p1", "p2", "f1", "f2", "h1", "h2", "w1", "w2", "cbar1", "cbar2", "eps"});
  r.check_keys("numerics", {"R_max", "n_panels", "grading", "nodes_per_panel", "tol", "max_iter", "R0", "doublings",
                            "tol_tail", "cap", "weight_R_probe", "weight_samples", "ivp_h", "check_R_weights",
                            "check_R_values", "check_samples", "c2_t_factor", "c2_w_max", "c2_n"});
  r.check_keys("output", {"dir", "formats"});
  if (!r.table("problem")) r.fail(0, "missing [problem] section");

  RunConfig cfg;
  cfg.origin = origin;
  cfg.name = r.string("", "name", std::filesystem::path(origin).stem().string());

  if (const toml::Table* t = r.table("parameters")) {
    for (const auto& [key, v] : *t) {
      if (!v.is_number()) r.fail(v.line, "parameter '" + key + "' must be a number");
      if (key == "x") r.fail(v.line, "'x' is the independent variable and cannot be a parameter");
      cfg.parameters[key] = std::get<double>(v.data);
    }
  }

  ProblemSpec& s = cfg.spec;
  s.N = r.integer("problem", "N", 0);
  if (!r.find("problem", "N")) r.fail(0, "missing required key problem.N");
  s.a = r.scalar("a", cfg.parameters, std::nullopt);
  s.b = r.scalar("b", cfg.parameters, std::nullopt);
  s.cbar1 = r.scalar("cbar1", cfg.parameters, 1.0);
  s.cbar2 = r.scalar("cbar2", cfg.parameters, 1.0);
  s.eps = r.scalar("eps", cfg.parameters, 0.5);
  s.p1 = r.function("p1", cfg.parameters, cfg.sources["p1"]);
  s.p2 = r.function("p2", cfg.parameters, cfg.sources["p2"]);
  s.f1 = r.function("f1", cfg.parameters, cfg.sources["f1"]);
  s.f2 = r.function("f2", cfg.parameters, cfg.sources["f2"]);
  // h and omega default to f: the splitting f(t w) = f(t) f(w) of power laws
  auto optional_fn = [&](const char* key, const ScalarFn& fallback, const char* fallback_key) {
    if (r.find("problem", key)) return r.function(key, cfg.parameters, cfg.sources[key]);
    cfg.sources[key] = cfg.sources[fallback_key];
    return fallback;
  };
  s.h1 = optional_fn("h1", s.f1, "f1");
  s.h2 = optional_fn("h2", s.f2, "f2");
  s.w1 = optional_fn("w1", s.f1, "f1");
  s.w2 = optional_fn("w2", s.f2, "f2");
  try {
    s.validate();
  } catch (const Error& e) {
    r.fail(0, std::string("invalid problem: ") + e.what());
  }

  NumericsConfig& n = cfg.numerics;
  n.solve.R_max = r.number("numerics", "R_max", n.solve.R_max);
  n.solve.panels = r.integer("numerics", "n_panels", n.solve.panels);
  n.solve.grading = r.number("numerics", "grading", n.solve.grading);
  n.solve.nodes_per_panel = r.integer("numerics", "nodes_per_panel", n.solve.nodes_per_panel);
  n.solve.tol = r.number("numerics", "tol", n.solve.tol);
  n.solve.max_iter = r.integer("numerics", "max_iter", n.solve.max_iter);
  n.limits.tail.R0 = r.number("numerics", "R0", n.limits.tail.R0);
  n.limits.tail.doublings = r.integer("numerics", "doublings", n.limits.tail.doublings);
  n.limits.tail.tol_tail = r.number("numerics", "tol_tail", n.limits.tail.tol_tail);
  n.limits.tail.cap = r.number("numerics", "cap", n.limits.tail.cap);
  n.weights.R_probe = r.number("numerics", "weight_R_probe", n.weights.R_probe);
  n.weights.samples = r.integer("numerics", "weight_samples", n.weights.samples);
  n.ivp_h = r.number("numerics", "ivp_h", n.ivp_h);
  n.hypotheses.R_weights = r.number("numerics", "check_R_weights", n.hypotheses.R_weights);
  n.hypotheses.R_values = r.number("numerics", "check_R_values", n.hypotheses.R_values);
  n.hypotheses.n = r.integer("numerics", "check_samples", n.hypotheses.n);
  n.hypotheses.c2_t_factor = r.number("numerics", "c2_t_factor", n.hypotheses.c2_t_factor);
  n.hypotheses.c2_w_max = r.number("numerics", "c2_w_max", n.hypotheses.c2_w_max);
  n.hypotheses.c2_n = r.integer("numerics", "c2_n", n.hypotheses.c2_n);

  require(r, n.solve.R_max > 0, "R_max", "must be positive");
  require(r, n.solve.panels >= 1, "n_panels", "must be at least 1");
  require(r, n.solve.grading >= 1, "grading", "must be at least 1");
  require(r, n.solve.nodes_per_panel >= 3 && n.solve.nodes_per_panel % 2 == 1, "nodes_per_panel",
          "must be odd and at least 3");
  require(r, n.solve.tol > 0, "tol", "must be positive");
  require(r, n.solve.max_iter >= 1, "max_iter", "must be at least 1");
  require(r, n.limits.tail.R0 > 1, "R0", "must exceed 1");
  require(r, n.limits.tail.doublings >= 3 && n.limits.tail.doublings <= 200, "doublings", "must lie in [3, 200]");
  require(r, n.limits.tail.tol_tail > 0, "tol_tail", "must be positive");
  require(r, n.limits.tail.cap > 0, "cap", "must be positive");
  require(r, n.weights.R_probe > 0, "weight_R_probe", "must be positive");
  require(r, n.weights.samples >= 2, "weight_samples", "must be at least 2");
  require(r, n.ivp_h > 0, "ivp_h", "must be positive");
  require(r, n.hypotheses.R_weights > 0 && n.hypotheses.R_values > 0, "check_R_*", "must be positive");
  require(r, n.hypotheses.n >= 2 && n.hypotheses.c2_n >= 2, "check_samples/c2_n", "must be at least 2");
  require(r, n.hypotheses.c2_t_factor >= 1 && n.hypotheses.c2_w_max >= 1, "c2_t_factor/c2_w_max", "must be >= 1");

  cfg.output.dir = r.string("output", "dir", cfg.output.dir);
  if (const toml::Value* f = r.find("output", "formats")) {
    if (!f->is_string()) r.fail(f->line, "formats must be a string such as \"csv,json\"");
    cfg.output.csv = cfg.output.json = false;
    std::stringstream ss(std::get<std::string>(f->data));
    std::string item;
    while (std::getline(ss, item, ',')) {
      while (!item.empty() && item.front() == ' ') item.erase(item.begin());
      while (!item.empty() && item.back() == ' ') item.pop_back();
      if (item == "csv") cfg.output.csv = true;
      else if (item == "json") cfg.output.json = true;
      else r.fail(f->line, "unknown output format '" + item + "'");
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot read config");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string(), overrides);
}

}  // namespace koradial
