#pragma once

// Text formats for sets, measures, IFS descriptions, curves and key-value
// configuration files. Lines starting with '#' are comments everywhere.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mfkit/analysis.hpp"
#include "mfkit/error.hpp"
#include "mfkit/geometry.hpp"
#include "mfkit/ifs.hpp"
#include "mfkit/measures.hpp"

namespace mfkit::io {

/// Shortest text that reads back to the same double; inf and -inf literal.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ValidationError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw ValidationError("not a number: '" + s + "'");
  return v;
}

inline std::int64_t parse_int(const std::string& s) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    throw ValidationError("not an integer: '" + s + "'");
  }
  if (used != s.size()) throw ValidationError("not an integer: '" + s + "'");
  return v;
}

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hash_hex(const std::string& params) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(params)));
  return buf;
}

/// "# op=<op> hash=<hex>" followed by "# params=<params>".
inline std::string provenance(const std::string& op, const std::string& params) {
  return "# op=" + op + " hash=" + hash_hex(params) + "\n# params=" + params + "\n";
}

namespace detail {

inline std::vector<std::string> content_lines(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    out.push_back(line.substr(first));
  }
  return out;
}

inline std::vector<std::string> split(const std::string& line, char sep = ' ') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  if (sep == ' ') {
    while (ss >> cur) out.push_back(cur);
  } else {
    while (std::getline(ss, cur, sep)) out.push_back(cur);
  }
  return out;
}

// Parses "key=value" tokens of a header line.
inline std::map<std::string, std::string> header_fields(const std::string& line) {
  std::map<std::string, std::string> out;
  for (const auto& tok : split(line)) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ValidationError("malformed header token '" + tok + "'");
    out[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return out;
}

inline std::string need(const std::map<std::string, std::string>& fields, const std::string& key) {
  const auto it = fields.find(key);
  if (it == fields.end()) throw ValidationError("header lacks '" + key + "'");
  return it->second;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return in;
}

}  // namespace detail

// ---- digital sets: "dim=<d> depth=<D>" then "depth m1 .. md" per cube.

inline void write_set(std::ostream& out, const DigitalSet& e) {
  out << "dim=" << e.dim() << " depth=" << e.depth() << "\n";
  for (const auto& c : e.cubes()) {
    out << c.depth;
    for (int a = 0; a < e.dim(); ++a) out << ' ' << c.coords[a];
    out << "\n";
  }
}

inline DigitalSet read_set(std::istream& in) {
  const auto lines = detail::content_lines(in);
  if (lines.empty()) throw ValidationError("empty set file");
  const auto head = detail::header_fields(lines[0]);
  const int dim = static_cast<int>(parse_int(detail::need(head, "dim")));
  const int depth = static_cast<int>(parse_int(detail::need(head, "depth")));
  mfkit::detail::check_dim_depth(dim, depth);
  std::vector<DyadicCube> cubes;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto tok = detail::split(lines[i]);
    if (static_cast<int>(tok.size()) != dim + 1) throw ValidationError("malformed cube line: " + lines[i]);
    DyadicCube c{static_cast<int>(parse_int(tok[0])), {}};
    for (int a = 0; a < dim; ++a) c.coords[a] = parse_int(tok[a + 1]);
    cubes.push_back(c);
  }
  return DigitalSet(dim, depth, std::move(cubes));
}

inline DigitalSet load_set(const std::string& path) {
  auto in = detail::open_in(path);
  return read_set(in);
}

// ---- measures: "dim=<d> atoms=<n>" then "w x1 .. xd" per atom.

inline void write_measure(std::ostream& out, const AtomicMeasure& mu) {
  out << "dim=" << mu.dim() << " atoms=" << mu.size() << "\n";
  for (const auto& a : mu.atoms()) {
    out << fmt(a.w);
    for (double v : a.x) out << ' ' << fmt(v);
    out << "\n";
  }
}

/// Weights are normalized on load.
inline AtomicMeasure read_measure(std::istream& in) {
  const auto lines = detail::content_lines(in);
  if (lines.empty()) throw ValidationError("empty measure file");
  const auto head = detail::header_fields(lines[0]);
  const int dim = static_cast<int>(parse_int(detail::need(head, "dim")));
  const auto count = parse_int(detail::need(head, "atoms"));
  if (count != static_cast<std::int64_t>(lines.size() - 1)) throw ValidationError("atom count does not match header");
  std::vector<Atom> atoms;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto tok = detail::split(lines[i]);
    if (static_cast<int>(tok.size()) != dim + 1) throw ValidationError("malformed atom line: " + lines[i]);
    Atom a{Point(dim), parse_double(tok[0])};
    for (int k = 0; k < dim; ++k) a.x[k] = parse_double(tok[k + 1]);
    atoms.push_back(std::move(a));
  }
  return AtomicMeasure(dim, std::move(atoms), false).normalize();
}

inline AtomicMeasure load_measure(const std::string& path) {
  auto in = detail::open_in(path);
  return read_measure(in);
}

// ---- IFS: "m=<count> dim=<d> [osc=0|1]" then "ratio t1 .. td [rotation, row-major]".

inline void write_ifs(std::ostream& out, const IFSystem& ifs) {
  out << "m=" << ifs.size() << " dim=" << ifs.dim() << " osc=" << (ifs.osc_declared() ? 1 : 0) << "\n";
  for (const auto& m : ifs.maps()) {
    out << fmt(m.ratio);
    for (double t : m.translation) out << ' ' << fmt(t);
    for (double r : m.rotation) out << ' ' << fmt(r);
    out << "\n";
  }
}

inline IFSystem read_ifs(std::istream& in) {
  const auto lines = detail::content_lines(in);
  if (lines.empty()) throw ValidationError("empty IFS file");
  const auto head = detail::header_fields(lines[0]);
  const auto m = parse_int(detail::need(head, "m"));
  const int dim = static_cast<int>(parse_int(detail::need(head, "dim")));
  const bool osc = head.count("osc") ? parse_int(head.at("osc")) != 0 : false;
  if (m != static_cast<std::int64_t>(lines.size() - 1)) throw ValidationError("map count does not match header");
  std::vector<Similarity> maps;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto tok = detail::split(lines[i]);
    const auto n = static_cast<int>(tok.size());
    if (n != 1 + dim && n != 1 + dim + dim * dim) throw ValidationError("malformed map line: " + lines[i]);
    Similarity s{parse_double(tok[0]), {}, std::vector<double>(dim)};
    for (int k = 0; k < dim; ++k) s.translation[k] = parse_double(tok[1 + k]);
    for (int k = 1 + dim; k < n; ++k) s.rotation.push_back(parse_double(tok[k]));
    maps.push_back(std::move(s));
  }
  return IFSystem(std::move(maps), osc);
}

inline IFSystem load_ifs(const std::string& path) {
  auto in = detail::open_in(path);
  return read_ifs(in);
}

// ---- curves: CSV "grid,value,flag".

inline void write_curve(std::ostream& out, const SpectrumCurve& c) {
  out << "grid,value,flag\n";
  for (std::size_t i = 0; i < c.size(); ++i) out << fmt(c.grid[i]) << ',' << fmt(c.values[i]) << ',' << c.flags[i] << "\n";
}

inline SpectrumCurve read_curve(std::istream& in) {
  const auto lines = detail::content_lines(in);
  if (lines.empty() || lines[0] != "grid,value,flag") throw ValidationError("curve file lacks its CSV header");
  std::vector<double> g, v;
  std::vector<std::string> f;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto tok = detail::split(lines[i], ',');
    if (tok.size() == 2) tok.emplace_back();
    if (tok.size() != 3) throw ValidationError("malformed curve row: " + lines[i]);
    g.push_back(parse_double(tok[0]));
    v.push_back(parse_double(tok[1]));
    f.push_back(tok[2]);
  }
  return SpectrumCurve(std::move(g), std::move(v), std::move(f));
}

inline SpectrumCurve load_curve(const std::string& path) {
  auto in = detail::open_in(path);
  return read_curve(in);
}

// ---- configuration: "key = value" lines.

using Config = std::map<std::string, std::string>;

inline Config read_config(std::istream& in) {
  Config cfg;
  for (const auto& line : detail::content_lines(in)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("config line without '=': " + line);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ValidationError("config line without key: " + line);
    if (cfg.count(key)) throw ValidationError("duplicate config key '" + key + "'");
    cfg[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

inline void write_config(std::ostream& out, const Config& cfg) {
  for (const auto& [k, v] : cfg) out << k << " = " << v << "\n";
}

/// Canonical "k=v;k=v" text of a config, used for hashing.
inline std::string canonical(const Config& cfg) {
  std::string s;
  for (const auto& [k, v] : cfg) s += k + "=" + v + ";";
  return s;
}

inline std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  for (auto tok : detail::split(text, ',')) {
    const auto b = tok.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    tok = tok.substr(b, tok.find_last_not_of(" \t") - b + 1);
    out.push_back(parse_double(tok));
  }
  return out;
}

}  // namespace mfkit::io
