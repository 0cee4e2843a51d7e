#include <bit>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mpe/errors.hpp"
#include "mpe/harness.hpp"

namespace mpe {

namespace {

constexpr const char* kMagic = "MOISTPE-SNAPSHOT 1";

std::string hex(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

double parse_hex(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw IoError("snapshot: bad value for " + what + ": '" + s + "'");
  return x;
}

struct NamedParam {
  const char* name;
  double Params::*member;
};

constexpr NamedParam kParams[] = {
    {"re1", &Params::re1}, {"re2", &Params::re2}, {"rt1", &Params::rt1}, {"rt2", &Params::rt2},
    {"rq1", &Params::rq1}, {"rq2", &Params::rq2}, {"r0", &Params::r0},   {"a", &Params::a},
    {"b", &Params::b},     {"p_cap", &Params::p_cap}, {"p0", &Params::p0},
    {"alpha_s", &Params::alpha_s}, {"beta_s", &Params::beta_s},
};

void put_le(std::string& out, double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

double get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const State& state, const Params& params) {
  const int nt = state.T.n_theta(), np = state.T.n_phi(), nx = state.T.n_lev();
  if (!state.v.theta.same_shape(state.T) || !state.v.phi.same_shape(state.T) || !state.q.same_shape(state.T)) {
    throw ShapeMismatch("write_snapshot: fields differ in shape");
  }
  std::string out = std::string(kMagic) + "\n";
  out += "n_theta " + std::to_string(nt) + "\n";
  out += "n_phi " + std::to_string(np) + "\n";
  out += "n_xi " + std::to_string(nx) + "\n";
  out += "time " + hex(state.t) + "\n";
  for (const auto& p : kParams) out += std::string("param ") + p.name + " " + hex(params.*(p.member)) + "\n";
  out += "fields v_theta v_phi T q\n";
  out += "END_HEADER\n";
  out.reserve(out.size() + 32 * state.T.size());
  for (const ScalarField* f : {&state.v.theta, &state.v.phi, &state.T, &state.q}) {
    for (double x : f->values()) put_le(out, x);
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write snapshot '" + path.string() + "'");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("short write to snapshot '" + path.string() + "'");
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open snapshot '" + path.string() + "'");
  std::ostringstream ss;
  ss << file.rdbuf();
  const std::string data = ss.str();

  const std::string end_marker = "END_HEADER\n";
  const auto end = data.find(end_marker);
  if (end == std::string::npos) throw IoError("snapshot '" + path.string() + "': missing END_HEADER");
  std::istringstream header(data.substr(0, end));
  std::string line;
  if (!std::getline(header, line) || line != kMagic) {
    throw IoError("snapshot '" + path.string() + "': unknown format");
  }
  Snapshot snap;
  bool have_fields = false;
  while (std::getline(header, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "n_theta") ls >> snap.n_theta;
    else if (tag == "n_phi") ls >> snap.n_phi;
    else if (tag == "n_xi") ls >> snap.n_xi;
    else if (tag == "time") {
      std::string v;
      ls >> v;
      snap.state.t = parse_hex(v, "time");
    } else if (tag == "param") {
      std::string name, v;
      ls >> name >> v;
      bool known = false;
      for (const auto& p : kParams) {
        if (name == p.name) {
          snap.params.*(p.member) = parse_hex(v, name);
          known = true;
        }
      }
      if (!known) throw IoError("snapshot: unknown parameter '" + name + "'");
    } else if (tag == "fields") {
      std::string rest;
      std::getline(ls, rest);
      if (rest != " v_theta v_phi T q") throw IoError("snapshot: unsupported field order '" + rest + "'");
      have_fields = true;
    } else if (!tag.empty()) {
      throw IoError("snapshot: unknown header line '" + line + "'");
    }
  }
  if (!have_fields || snap.n_theta < 1 || snap.n_phi < 1 || snap.n_xi < 1) {
    throw IoError("snapshot '" + path.string() + "': incomplete header");
  }
  const std::size_t count = static_cast<std::size_t>(snap.n_theta) * snap.n_phi * snap.n_xi;
  const std::size_t payload = data.size() - (end + end_marker.size());
  if (payload != 4 * count * 8) {
    throw IoError("snapshot '" + path.string() + "': payload has " + std::to_string(payload) +
                  " bytes, expected " + std::to_string(4 * count * 8));
  }
  const auto* p = reinterpret_cast<const unsigned char*>(data.data() + end + end_marker.size());
  snap.state.v = VectorField(snap.n_theta, snap.n_phi, snap.n_xi);
  snap.state.T = ScalarField(snap.n_theta, snap.n_phi, snap.n_xi);
  snap.state.q = ScalarField(snap.n_theta, snap.n_phi, snap.n_xi);
  for (ScalarField* f : {&snap.state.v.theta, &snap.state.v.phi, &snap.state.T, &snap.state.q}) {
    for (double& x : f->values()) {
      x = get_le(p);
      p += 8;
    }
  }
  return snap;
}

}  // namespace mpe
