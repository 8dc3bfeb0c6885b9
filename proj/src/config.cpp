#include "vpatch/config.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace vpatch {

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"domain", {"kind", "width", "height"}},
      {"vortex", {"kappa1", "kappa2", "x1", "x2"}},
      {"solver", {"lambda", "lambdas", "n", "max_iters", "energy_tol", "refine", "min_cells"}},
      {"evolution",
       {"patch", "perturb", "turnovers", "sample_every", "snapshot_every", "cfl", "scheme", "trials"}},
      {"run", {"out_dir", "seed", "threads"}},
  };
  return s;
}

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

void check_known(const std::string& section, const std::string& key) {
  const auto it = schema().find(section);
  if (it == schema().end()) config_error(fmt::format("unknown section [{}]", section));
  if (!it->second.contains(key)) config_error(fmt::format("unknown key {}.{}", section, key));
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <typename T>
T parse_number(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  T v{};
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || end != t.data() + t.size())
    config_error(fmt::format("{}: expected a number, got '{}'", field, text));
  if constexpr (std::is_floating_point_v<T>)
    if (!std::isfinite(v)) config_error(fmt::format("{}: value must be finite", field));
  return v;
}

RawConfig from_ini(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    config_error(fmt::format("line {}: {}", e.line(), e.message()));
  }
  RawConfig raw;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) config_error(fmt::format("key '{}' outside any section", section));
    if (!schema().contains(section)) config_error(fmt::format("unknown section [{}]", section));
    for (const auto& [key, value] : body) {
      check_known(section, key);
      raw[section][key] = value.get_value<std::string>();
    }
  }
  return raw;
}

std::string scalar_text(const std::string& field, const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number() || v.is_boolean()) return v.dump();
  config_error(fmt::format("{}: expected a scalar", field));
}

RawConfig from_json(const std::string& text) {
  // Duplicate keys are legal JSON, so track them per object while parsing.
  std::vector<std::set<std::string>> open;
  std::string dup;
  auto cb = [&](int, nlohmann::json::parse_event_t ev, nlohmann::json& parsed) {
    using E = nlohmann::json::parse_event_t;
    if (ev == E::object_start) open.emplace_back();
    if (ev == E::object_end) open.pop_back();
    if (ev == E::key && !open.back().insert(parsed.get<std::string>()).second && dup.empty())
      dup = parsed.get<std::string>();
    return true;
  };
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text, cb);
  } catch (const nlohmann::json::parse_error& e) {
    config_error(fmt::format("JSON at byte {}: {}", e.byte, e.what()));
  }
  if (!dup.empty()) config_error(fmt::format("duplicate key '{}'", dup));
  if (!doc.is_object()) config_error("top level must be an object of sections");

  RawConfig raw;
  for (const auto& [section, body] : doc.items()) {
    if (!body.is_object()) config_error(fmt::format("section '{}' must be an object", section));
    for (const auto& [key, value] : body.items()) {
      check_known(section, key);
      const std::string field = section + "." + key;
      std::string s;
      if (value.is_array()) {
        for (std::size_t k = 0; k < value.size(); ++k) s += (k ? "," : "") + scalar_text(field, value[k]);
      } else {
        s = scalar_text(field, value);
      }
      raw[section][key] = s;
    }
  }
  return raw;
}

}  // namespace

Domain RunConfig::make_domain() const {
  return domain == "disk" ? Domain::unit_disk() : Domain::rectangle(width, height);
}

RawConfig parse_raw(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (text[first] == '{' || nlohmann::json::accept(text))) return from_json(text);
  return from_ini(text);
}

void set_raw(RawConfig& raw, const std::string& dotted_key, const std::string& value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos) config_error("expected section.key, got " + dotted_key);
  const std::string section = dotted_key.substr(0, dot), key = dotted_key.substr(dot + 1);
  check_known(section, key);
  raw[section][key] = value;
}

RunConfig resolve(const RawConfig& raw) {
  RunConfig c;
  auto get = [&](const char* section, const char* key) -> const std::string* {
    const auto s = raw.find(section);
    if (s == raw.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  };
  auto field = [](const char* section, const char* key) { return fmt::format("{}.{}", section, key); };
  auto real = [&](const char* s, const char* k, double& out) {
    if (auto v = get(s, k)) out = parse_number<double>(field(s, k), *v);
  };
  auto integer = [&](const char* s, const char* k, int& out) {
    if (auto v = get(s, k)) out = parse_number<int>(field(s, k), *v);
  };
  auto text = [&](const char* s, const char* k, std::string& out) {
    if (auto v = get(s, k)) out = trim(*v);
  };
  auto point = [&](const char* s, const char* k, std::optional<Vec2>& out) {
    if (auto v = get(s, k)) {
      const auto parts = split(*v);
      if (parts.size() != 2) config_error(fmt::format("{}: expected 'x, y'", field(s, k)));
      out = Vec2{parse_number<double>(field(s, k), parts[0]), parse_number<double>(field(s, k), parts[1])};
    }
  };
  auto positive = [&](const char* s, const char* k, double v) {
    if (!(v > 0.0)) config_error(fmt::format("{}: must be positive", field(s, k)));
  };

  text("domain", "kind", c.domain);
  if (c.domain != "disk" && c.domain != "rectangle")
    config_error("domain.kind: expected disk or rectangle, got '" + c.domain + "'");
  real("domain", "width", c.width);
  real("domain", "height", c.height);
  positive("domain", "width", c.width);
  positive("domain", "height", c.height);

  if (auto v = get("vortex", "kappa1")) c.kappa1 = parse_number<double>("vortex.kappa1", *v);
  if (auto v = get("vortex", "kappa2")) c.kappa2 = parse_number<double>("vortex.kappa2", *v);
  if (c.kappa1 && !(*c.kappa1 > 0.0)) config_error("vortex.kappa1: must be positive");
  if (c.kappa2 && !(*c.kappa2 < 0.0)) config_error("vortex.kappa2: must be negative");
  point("vortex", "x1", c.x1);
  point("vortex", "x2", c.x2);

  real("solver", "lambda", c.lambda);
  positive("solver", "lambda", c.lambda);
  if (auto v = get("solver", "lambdas")) {
    c.lambdas.clear();
    for (const auto& p : split(*v)) c.lambdas.push_back(parse_number<double>("solver.lambdas", p));
    if (c.lambdas.empty()) config_error("solver.lambdas: empty list");
    for (double l : c.lambdas) positive("solver", "lambdas", l);
  }
  integer("solver", "n", c.n);
  if (c.n < 8) config_error("solver.n: must be at least 8");
  integer("solver", "max_iters", c.max_iters);
  if (c.max_iters < 1) config_error("solver.max_iters: must be at least 1");
  real("solver", "energy_tol", c.energy_tol);
  positive("solver", "energy_tol", c.energy_tol);
  if (auto v = get("solver", "refine")) {
    const std::string t = trim(*v);
    if (t == "true" || t == "1") c.refine = true;
    else if (t == "false" || t == "0") c.refine = false;
    else config_error("solver.refine: expected true or false, got '" + t + "'");
  }
  integer("solver", "min_cells", c.min_cells);

  text("evolution", "patch", c.patch);
  text("evolution", "perturb", c.perturb);
  real("evolution", "turnovers", c.turnovers);
  positive("evolution", "turnovers", c.turnovers);
  real("evolution", "sample_every", c.sample_every);
  positive("evolution", "sample_every", c.sample_every);
  real("evolution", "snapshot_every", c.snapshot_every);
  positive("evolution", "snapshot_every", c.snapshot_every);
  real("evolution", "cfl", c.cfl);
  if (!(c.cfl > 0.0 && c.cfl <= 0.5)) config_error("evolution.cfl: must lie in (0, 0.5]");
  text("evolution", "scheme", c.scheme);
  if (c.scheme != "mapped" && c.scheme != "direct")
    config_error("evolution.scheme: expected mapped or direct, got '" + c.scheme + "'");
  integer("evolution", "trials", c.trials);
  if (c.trials < 1) config_error("evolution.trials: must be at least 1");

  text("run", "out_dir", c.out_dir);
  if (auto v = get("run", "seed")) c.seed = parse_number<std::uint64_t>("run.seed", *v);
  integer("run", "threads", c.threads);
  if (c.threads != 1) config_error("run.threads: only 1 is supported");
  return c;
}

double require_kappa1(const RunConfig& cfg) {
  if (!cfg.kappa1) config_error("vortex.kappa1 is required (--kappa1)");
  return *cfg.kappa1;
}

double require_kappa2(const RunConfig& cfg) {
  if (!cfg.kappa2) config_error("vortex.kappa2 is required (--kappa2)");
  return *cfg.kappa2;
}

nlohmann::json to_json(const RunConfig& c) {
  using nlohmann::json;
  json j{
      {"domain", {{"kind", c.domain}, {"width", c.width}, {"height", c.height}}},
      {"vortex", json::object()},
      {"solver",
       {{"lambda", c.lambda},
        {"lambdas", c.lambdas},
        {"n", c.n},
        {"max_iters", c.max_iters},
        {"energy_tol", c.energy_tol},
        {"refine", c.refine},
        {"min_cells", c.min_cells}}},
      {"evolution",
       {{"patch", c.patch},
        {"perturb", c.perturb},
        {"turnovers", c.turnovers},
        {"sample_every", c.sample_every},
        {"snapshot_every", c.snapshot_every},
        {"cfl", c.cfl},
        {"scheme", c.scheme},
        {"trials", c.trials}}},
      {"run", {{"out_dir", c.out_dir}, {"seed", c.seed}, {"threads", c.threads}}},
  };
  // Unset optionals are left out so the document parses back to the same config.
  json& v = j["vortex"];
  if (c.kappa1) v["kappa1"] = *c.kappa1;
  if (c.kappa2) v["kappa2"] = *c.kappa2;
  if (c.x1) v["x1"] = json::array({c.x1->x, c.x1->y});
  if (c.x2) v["x2"] = json::array({c.x2->x, c.x2->y});
  return j;
}

}  // namespace vpatch
