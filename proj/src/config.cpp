#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "mpe/errors.hpp"
#include "mpe/harness.hpp"

namespace mpe {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(value.c_str(), &end);
  if (value.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(x)) {
    throw ValidationError(key, "expected a finite number, got '" + value + "'");
  }
  return x;
}

long to_long(const std::string& key, const std::string& value) {
  char* end = nullptr;
  errno = 0;
  const long x = std::strtol(value.c_str(), &end, 10);
  if (value.empty() || *end != '\0' || errno == ERANGE) {
    throw ValidationError(key, "expected an integer, got '" + value + "'");
  }
  return x;
}

int to_int(const std::string& key, const std::string& value) {
  const long x = to_long(key, value);
  if (x < -2147483647L || x > 2147483647L) throw ValidationError(key, "integer out of range");
  return static_cast<int>(x);
}

std::string number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Key {
  std::string name;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

template <class Member>
Key real_key(std::string name, Member member) {
  return {name,
          [name, member](Config& c, const std::string& v) { member(c) = to_double(name, v); },
          [member](const Config& c) { return number(member(const_cast<Config&>(c))); }};
}

template <class Member>
Key int_key(std::string name, Member member) {
  return {name,
          [name, member](Config& c, const std::string& v) { member(c) = to_int(name, v); },
          [member](const Config& c) { return std::to_string(member(const_cast<Config&>(c))); }};
}

template <class Member>
Key long_key(std::string name, Member member) {
  return {name,
          [name, member](Config& c, const std::string& v) { member(c) = to_long(name, v); },
          [member](const Config& c) { return std::to_string(member(const_cast<Config&>(c))); }};
}

template <class Member>
Key text_key(std::string name, Member member) {
  return {name, [member](Config& c, const std::string& v) { member(c) = v; },
          [member](const Config& c) { return member(const_cast<Config&>(c)); }};
}

void add_forcing_keys(std::vector<Key>& keys, const std::string& prefix, ForcingSpec Config::*slot) {
  keys.push_back(text_key(prefix + "profile", [slot](Config& c) -> std::string& { return (c.*slot).profile; }));
  keys.push_back(real_key(prefix + "amplitude", [slot](Config& c) -> double& { return (c.*slot).amplitude; }));
  keys.push_back(real_key(prefix + "center", [slot](Config& c) -> double& { return (c.*slot).center; }));
  keys.push_back(real_key(prefix + "width", [slot](Config& c) -> double& { return (c.*slot).width; }));
  keys.push_back(int_key(prefix + "l", [slot](Config& c) -> int& { return (c.*slot).l; }));
  keys.push_back(int_key(prefix + "m", [slot](Config& c) -> int& { return (c.*slot).m; }));
  keys.push_back(text_key(prefix + "snapshot", [slot](Config& c) -> std::string& { return (c.*slot).snapshot; }));
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    k.push_back(int_key("grid.n_theta", [](Config& c) -> int& { return c.grid.n_theta; }));
    k.push_back(int_key("grid.n_phi", [](Config& c) -> int& { return c.grid.n_phi; }));
    k.push_back(int_key("grid.n_xi", [](Config& c) -> int& { return c.grid.n_xi; }));
    k.push_back(int_key("grid.polar_filter_band", [](Config& c) -> int& { return c.grid.polar_filter_band; }));

    k.push_back(real_key("params.re1", [](Config& c) -> double& { return c.params.re1; }));
    k.push_back(real_key("params.re2", [](Config& c) -> double& { return c.params.re2; }));
    k.push_back(real_key("params.rt1", [](Config& c) -> double& { return c.params.rt1; }));
    k.push_back(real_key("params.rt2", [](Config& c) -> double& { return c.params.rt2; }));
    k.push_back(real_key("params.rq1", [](Config& c) -> double& { return c.params.rq1; }));
    k.push_back(real_key("params.rq2", [](Config& c) -> double& { return c.params.rq2; }));
    k.push_back(real_key("params.r0", [](Config& c) -> double& { return c.params.r0; }));
    k.push_back(real_key("params.a", [](Config& c) -> double& { return c.params.a; }));
    k.push_back(real_key("params.b", [](Config& c) -> double& { return c.params.b; }));
    k.push_back(real_key("params.p_cap", [](Config& c) -> double& { return c.params.p_cap; }));
    k.push_back(real_key("params.p0", [](Config& c) -> double& { return c.params.p0; }));
    k.push_back(real_key("params.alpha_s", [](Config& c) -> double& { return c.params.alpha_s; }));
    k.push_back(real_key("params.beta_s", [](Config& c) -> double& { return c.params.beta_s; }));

    k.push_back(real_key("step.dt", [](Config& c) -> double& { return c.step.dt; }));
    k.push_back({"step.diffusion_mode",
                 [](Config& c, const std::string& v) {
                   if (v == "explicit") c.step.diffusion_mode = DiffusionMode::explicit_horizontal;
                   else if (v == "cn") c.step.diffusion_mode = DiffusionMode::crank_nicolson;
                   else throw ValidationError("step.diffusion_mode", "expected 'explicit' or 'cn', got '" + v + "'");
                 },
                 [](const Config& c) -> std::string {
                   return c.step.diffusion_mode == DiffusionMode::explicit_horizontal ? "explicit" : "cn";
                 }});
    k.push_back(real_key("step.projection_tol", [](Config& c) -> double& { return c.step.projection_tol; }));
    k.push_back(int_key("step.max_cg_iters", [](Config& c) -> int& { return c.step.max_cg_iters; }));
    k.push_back(real_key("step.cfl_safety", [](Config& c) -> double& { return c.step.cfl_safety; }));

    add_forcing_keys(k, "forcing.q1.", &Config::q1);
    add_forcing_keys(k, "forcing.q2.", &Config::q2);

    k.push_back(text_key("initial.profile", [](Config& c) -> std::string& { return c.initial.profile; }));
    k.push_back(real_key("initial.amplitude", [](Config& c) -> double& { return c.initial.amplitude; }));
    k.push_back({"initial.seed",
                 [](Config& c, const std::string& v) {
                   const long s = to_long("initial.seed", v);
                   if (s < 0) throw ValidationError("initial.seed", "must be non-negative");
                   c.initial.seed = static_cast<std::uint64_t>(s);
                 },
                 [](const Config& c) { return std::to_string(c.initial.seed); }});
    k.push_back(text_key("initial.snapshot", [](Config& c) -> std::string& { return c.initial.snapshot; }));

    k.push_back(real_key("run.t_end", [](Config& c) -> double& { return c.run.t_end; }));
    k.push_back(long_key("run.output_every", [](Config& c) -> long& { return c.run.output_every; }));
    k.push_back(long_key("run.snapshot_every", [](Config& c) -> long& { return c.run.snapshot_every; }));
    k.push_back(text_key("run.out_dir", [](Config& c) -> std::string& { return c.run.out_dir; }));
    k.push_back(int_key("run.workers", [](Config& c) -> int& { return c.run.workers; }));
    return k;
  }();
  return table;
}

void validate_forcing(const ForcingSpec& f, const std::string& prefix) {
  if (f.profile == "zero" || f.profile == "constant") return;
  if (f.profile == "zonal_band") {
    if (!(f.width > 0.0)) throw ValidationError(prefix + "width", "must be positive");
    return;
  }
  if (f.profile == "harmonic_bump") {
    if (f.l < 0 || f.l > 32) throw ValidationError(prefix + "l", "must lie in [0, 32]");
    if (f.m < 0 || f.m > f.l) throw ValidationError(prefix + "m", "must lie in [0, l]");
    return;
  }
  if (f.profile == "snapshot") {
    if (f.snapshot.empty()) throw ValidationError(prefix + "snapshot", "path required");
    return;
  }
  throw ValidationError(prefix + "profile", "unknown profile '" + f.profile + "'");
}

}  // namespace

void Config::validate() const {
  if (grid.n_theta < 4) throw ValidationError("grid.n_theta", "must be at least 4");
  if (grid.n_phi < 4 || grid.n_phi % 2 != 0) throw ValidationError("grid.n_phi", "must be even and at least 4");
  if (grid.n_xi < 2) throw ValidationError("grid.n_xi", "must be at least 2");
  if (grid.polar_filter_band < kAutoFilterBand || grid.polar_filter_band > grid.n_theta / 2) {
    throw ValidationError("grid.polar_filter_band", "must be -1 (auto) or lie in [0, n_theta/2]");
  }
  params.validate();
  step.validate();
  validate_forcing(q1, "forcing.q1.");
  validate_forcing(q2, "forcing.q2.");
  if (initial.profile != "rest" && initial.profile != "random" && initial.profile != "zonal_jet" &&
      initial.profile != "snapshot") {
    throw ValidationError("initial.profile", "unknown profile '" + initial.profile + "'");
  }
  if (!(initial.amplitude >= 0.0)) throw ValidationError("initial.amplitude", "must be non-negative");
  if (initial.profile == "snapshot" && initial.snapshot.empty()) {
    throw ValidationError("initial.snapshot", "path required");
  }
  if (!(run.t_end >= 0.0)) throw ValidationError("run.t_end", "must be non-negative");
  if (run.output_every < 1) throw ValidationError("run.output_every", "must be at least 1");
  if (run.snapshot_every < 0) throw ValidationError("run.snapshot_every", "must be non-negative");
  if (run.workers < 1) throw ValidationError("run.workers", "must be at least 1");
}

Config parse_config(std::string_view text) {
  Config cfg;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) throw ParseError(line_no, "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "missing key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (!section.empty()) key = section + "." + key;
    bool found = false;
    for (const Key& k : keys()) {
      if (k.name == key) {
        k.set(cfg, value);
        found = true;
        break;
      }
    }
    if (!found) throw ValidationError(key, "unknown key");
  }
  cfg.validate();
  return cfg;
}

std::string render_config(const Config& cfg) {
  std::string out;
  for (const Key& k : keys()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

Grid make_grid(const Config& cfg) {
  return build_grid(cfg.grid.n_theta, cfg.grid.n_phi, cfg.grid.n_xi, cfg.grid.polar_filter_band);
}

}  // namespace mpe
