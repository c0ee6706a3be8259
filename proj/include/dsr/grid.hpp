#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dsr/util.hpp"

namespace dsr {

// ---------------------------------------------------------------------------
// Scenario document grammar (sections may appear in any order, `#` comments):
//
//   [limits]
//   kva_base = 5000            # per-unit power base, kVA
//   kv_base = 4.16             # per-unit voltage base, kV
//   hmin = 0.9025              # default squared-voltage floor, per-unit^2
//   hmax = 1.1025              # default squared-voltage ceiling
//   w_p = 100                  # voltage-penalty weight, kW per per-unit^2
//   horizon = 4                # default episode horizon
//   near_optimal_kw = 3000     # near-optimal threshold for eval reports
//
//   [bus]
//   650                        # one id per line; optional hmin=/hmax= override
//   632 hmin=0.90 hmax=1.10
//
//   [line]
//   650 632 r=0.01 x=0.02      # impedances in per-unit on the declared base
//   632 671 r=0.01 x=0.02 switch=s2
//
//   [load]
//   671 p=1155 q=660           # kW / kvar; one record per line
//
//   [source]
//   650 kind=substation cap=5000
//   250 kind=dg cap=800 allowed_cells=[2,3]   # no spaces inside the list
//
// Unknown keys are rejected. Loads are identified by declaration index; all
// per-load orderings ("ascending load id") follow declaration order.
// ---------------------------------------------------------------------------

enum class SourceKind { Substation, Dg };

struct BusSpec {
  std::string id;
  double h_min = 0.0;
  double h_max = 0.0;
};

struct LineSpec {
  std::string from;
  std::string to;
  double r = 0.0;
  double x = 0.0;
  bool switchable = false;
  std::string switch_id;
};

struct LoadSpec {
  std::string bus;
  double p_kw = 0.0;
  double q_kvar = 0.0;
};

struct SourceSpec {
  std::string bus;
  SourceKind kind = SourceKind::Substation;
  double cap_kw = 0.0;
  std::optional<std::vector<int>> allowed_cells;
};

// Scenario-level knobs that are not part of the physical network.
struct ScenarioDefaults {
  std::optional<double> w_p;
  std::optional<int> horizon;
  std::optional<double> near_optimal_kw;
};

struct GridSpec {
  std::string name;
  std::vector<BusSpec> buses;
  std::vector<LineSpec> lines;
  std::vector<LoadSpec> loads;
  std::vector<SourceSpec> sources;
  double kva_base = 1000.0;
  double kv_base = 1.0;
  double default_h_min = 0.9025;  // 0.95^2
  double default_h_max = 1.1025;  // 1.05^2
  ScenarioDefaults defaults;

  // Resolved indices, filled in by the parser.
  std::vector<std::size_t> line_from_idx, line_to_idx;
  std::vector<std::size_t> load_bus_idx;
  std::vector<std::size_t> source_bus_idx;

  std::size_t bus_index(std::string_view id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
      if (buses[i].id == id) return i;
    throw ValidationError("unknown bus '" + std::string(id) + "'");
  }

  double total_load_kw() const {
    double sum = 0.0;
    for (const auto& l : loads) sum += l.p_kw;
    return sum;
  }

  // Deterministic re-serialization used for checksums.
  std::string canonical_text() const;
  std::string checksum() const { return hex16(fnv1a64(canonical_text())); }
};

namespace detail {

struct KvPair {
  std::string_view key, value;
};

inline bool parse_kv(std::string_view tok, KvPair& out) {
  const auto eq = tok.find('=');
  if (eq == std::string_view::npos) return false;
  out.key = tok.substr(0, eq);
  out.value = tok.substr(eq + 1);
  return true;
}

inline double require_f64(std::string_view v, std::string_view key, int line) {
  auto f = parse_f64(v);
  if (!f) throw ParseError("value of '" + std::string(key) + "' is not a number: '" + std::string(v) + "'", line);
  return *f;
}

inline std::vector<int> parse_int_list(std::string_view v, int line) {
  if (v.size() < 2 || v.front() != '[' || v.back() != ']')
    throw ParseError("expected a bracketed list like [2,3], got '" + std::string(v) + "'", line);
  std::vector<int> out;
  std::string_view body = v.substr(1, v.size() - 2);
  while (!body.empty()) {
    const auto comma = body.find(',');
    std::string_view item = trim(comma == std::string_view::npos ? body : body.substr(0, comma));
    auto n = parse_i64(item);
    if (!n) throw ParseError("list element is not an integer: '" + std::string(item) + "'", line);
    out.push_back(static_cast<int>(*n));
    if (comma == std::string_view::npos) break;
    body = body.substr(comma + 1);
  }
  return out;
}

}  // namespace detail

inline GridSpec parse_grid(std::string_view text, std::string name = "") {
  using detail::KvPair;
  GridSpec g;
  g.name = std::move(name);

  struct PendingBus {
    std::string id;
    std::optional<double> h_min, h_max;
    int line;
  };
  std::vector<PendingBus> pending_buses;

  enum class Section { None, Bus, Line, Load, Source, Limits };
  Section section = Section::None;

  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;

    const auto hash = raw.find('#');
    if (hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string_view line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", lineno);
      const std::string_view sec = line.substr(1, line.size() - 2);
      if (sec == "bus") section = Section::Bus;
      else if (sec == "line") section = Section::Line;
      else if (sec == "load") section = Section::Load;
      else if (sec == "source") section = Section::Source;
      else if (sec == "limits") section = Section::Limits;
      else throw ParseError("unknown section [" + std::string(sec) + "]", lineno);
      continue;
    }

    const auto toks = split_ws(line);
    switch (section) {
      case Section::None:
        throw ParseError("content before any section header", lineno);

      case Section::Bus: {
        PendingBus b;
        b.id = std::string(toks[0]);
        b.line = lineno;
        for (std::size_t i = 1; i < toks.size(); ++i) {
          KvPair kv;
          if (!detail::parse_kv(toks[i], kv)) throw ParseError("expected key=value, got '" + std::string(toks[i]) + "'", lineno);
          if (kv.key == "hmin") b.h_min = detail::require_f64(kv.value, kv.key, lineno);
          else if (kv.key == "hmax") b.h_max = detail::require_f64(kv.value, kv.key, lineno);
          else throw ParseError("unknown bus key '" + std::string(kv.key) + "'", lineno);
        }
        pending_buses.push_back(std::move(b));
        break;
      }

      case Section::Line: {
        if (toks.size() < 2) throw ParseError("line record needs two endpoint buses", lineno);
        LineSpec l;
        l.from = std::string(toks[0]);
        l.to = std::string(toks[1]);
        bool have_r = false, have_x = false;
        for (std::size_t i = 2; i < toks.size(); ++i) {
          KvPair kv;
          if (!detail::parse_kv(toks[i], kv)) throw ParseError("expected key=value, got '" + std::string(toks[i]) + "'", lineno);
          if (kv.key == "r") { l.r = detail::require_f64(kv.value, kv.key, lineno); have_r = true; }
          else if (kv.key == "x") { l.x = detail::require_f64(kv.value, kv.key, lineno); have_x = true; }
          else if (kv.key == "switch") { l.switchable = true; l.switch_id = std::string(kv.value); }
          else throw ParseError("unknown line key '" + std::string(kv.key) + "'", lineno);
        }
        if (!have_r || !have_x) throw ParseError("line record needs r= and x=", lineno);
        if (l.r < 0.0 || l.x < 0.0) throw ValidationError("negative impedance on line " + l.from + "-" + l.to);
        if (l.switchable && l.switch_id.empty()) throw ParseError("switch id must be non-empty", lineno);
        g.lines.push_back(std::move(l));
        break;
      }

      case Section::Load: {
        LoadSpec d;
        d.bus = std::string(toks[0]);
        bool have_p = false;
        for (std::size_t i = 1; i < toks.size(); ++i) {
          KvPair kv;
          if (!detail::parse_kv(toks[i], kv)) throw ParseError("expected key=value, got '" + std::string(toks[i]) + "'", lineno);
          if (kv.key == "p") { d.p_kw = detail::require_f64(kv.value, kv.key, lineno); have_p = true; }
          else if (kv.key == "q") d.q_kvar = detail::require_f64(kv.value, kv.key, lineno);
          else throw ParseError("unknown load key '" + std::string(kv.key) + "'", lineno);
        }
        if (!have_p) throw ParseError("load record needs p=", lineno);
        if (d.p_kw < 0.0 || d.q_kvar < 0.0) throw ValidationError("negative nominal power on load at bus " + d.bus);
        g.loads.push_back(std::move(d));
        break;
      }

      case Section::Source: {
        SourceSpec s;
        s.bus = std::string(toks[0]);
        bool have_kind = false, have_cap = false;
        for (std::size_t i = 1; i < toks.size(); ++i) {
          KvPair kv;
          if (!detail::parse_kv(toks[i], kv)) throw ParseError("expected key=value, got '" + std::string(toks[i]) + "'", lineno);
          if (kv.key == "kind") {
            if (kv.value == "substation") s.kind = SourceKind::Substation;
            else if (kv.value == "dg") s.kind = SourceKind::Dg;
            else throw ParseError("source kind must be 'substation' or 'dg'", lineno);
            have_kind = true;
          } else if (kv.key == "cap") {
            s.cap_kw = detail::require_f64(kv.value, kv.key, lineno);
            have_cap = true;
          } else if (kv.key == "allowed_cells") {
            s.allowed_cells = detail::parse_int_list(kv.value, lineno);
          } else {
            throw ParseError("unknown source key '" + std::string(kv.key) + "'", lineno);
          }
        }
        if (!have_kind || !have_cap) throw ParseError("source record needs kind= and cap=", lineno);
        if (s.cap_kw <= 0.0) throw ValidationError("source capacity must be positive at bus " + s.bus);
        g.sources.push_back(std::move(s));
        break;
      }

      case Section::Limits: {
        // Accept both `key = value` and `key=value`.
        std::string joined;
        for (const auto& t : toks) joined += std::string(t);
        KvPair kv;
        if (!detail::parse_kv(joined, kv)) throw ParseError("expected key = value in [limits]", lineno);
        if (kv.key == "kva_base") g.kva_base = detail::require_f64(kv.value, kv.key, lineno);
        else if (kv.key == "kv_base") g.kv_base = detail::require_f64(kv.value, kv.key, lineno);
        else if (kv.key == "hmin") g.default_h_min = detail::require_f64(kv.value, kv.key, lineno);
        else if (kv.key == "hmax") g.default_h_max = detail::require_f64(kv.value, kv.key, lineno);
        else if (kv.key == "w_p") g.defaults.w_p = detail::require_f64(kv.value, kv.key, lineno);
        else if (kv.key == "horizon") {
          auto n = parse_i64(kv.value);
          if (!n || *n < 1) throw ParseError("horizon must be a positive integer", lineno);
          g.defaults.horizon = static_cast<int>(*n);
        } else if (kv.key == "near_optimal_kw") g.defaults.near_optimal_kw = detail::require_f64(kv.value, kv.key, lineno);
        else throw ParseError("unknown limits key '" + std::string(kv.key) + "'", lineno);
        break;
      }
    }
  }

  if (g.kva_base <= 0.0 || g.kv_base <= 0.0) throw ValidationError("per-unit base must be positive");

  // Materialize buses with limit defaults applied.
  std::set<std::string> seen;
  for (const auto& pb : pending_buses) {
    if (!seen.insert(pb.id).second) throw ValidationError("duplicate bus id '" + pb.id + "'");
    BusSpec b;
    b.id = pb.id;
    b.h_min = pb.h_min.value_or(g.default_h_min);
    b.h_max = pb.h_max.value_or(g.default_h_max);
    if (!(b.h_min < b.h_max))
      throw ValidationError("bus '" + b.id + "' has hmin >= hmax");
    g.buses.push_back(std::move(b));
  }
  if (g.buses.empty()) throw ValidationError("scenario declares no buses");

  auto idx_of = [&](const std::string& id, const char* what) -> std::size_t {
    for (std::size_t i = 0; i < g.buses.size(); ++i)
      if (g.buses[i].id == id) return i;
    throw ValidationError(std::string("unknown bus '") + id + "' referenced by " + what);
  };

  std::set<std::string> switch_ids;
  for (const auto& l : g.lines) {
    g.line_from_idx.push_back(idx_of(l.from, "line"));
    g.line_to_idx.push_back(idx_of(l.to, "line"));
    if (l.from == l.to) throw ValidationError("line connects bus '" + l.from + "' to itself");
    if (l.switchable && !switch_ids.insert(l.switch_id).second)
      throw ValidationError("duplicate switch id '" + l.switch_id + "'");
  }
  for (const auto& d : g.loads) g.load_bus_idx.push_back(idx_of(d.bus, "load"));
  for (const auto& s : g.sources) g.source_bus_idx.push_back(idx_of(s.bus, "source"));

  // The whole network (switchable lines included) must be one component.
  if (!g.buses.empty()) {
    std::vector<std::vector<std::size_t>> adj(g.buses.size());
    for (std::size_t i = 0; i < g.lines.size(); ++i) {
      adj[g.line_from_idx[i]].push_back(g.line_to_idx[i]);
      adj[g.line_to_idx[i]].push_back(g.line_from_idx[i]);
    }
    std::vector<char> vis(g.buses.size(), 0);
    std::vector<std::size_t> stack{0};
    vis[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (auto v : adj[u])
        if (!vis[v]) {
          vis[v] = 1;
          ++count;
          stack.push_back(v);
        }
    }
    if (count != g.buses.size()) throw ValidationError("network is not connected");
  }
  return g;
}

inline GridSpec load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string name = path;
  const auto slash = name.find_last_of('/');
  if (slash != std::string::npos) name = name.substr(slash + 1);
  const auto dot = name.find_last_of('.');
  if (dot != std::string::npos) name = name.substr(0, dot);
  return parse_grid(ss.str(), name);
}

inline std::string GridSpec::canonical_text() const {
  std::ostringstream out;
  out << "[limits]\n";
  out << "kva_base = " << fmt_f64(kva_base) << "\n";
  out << "kv_base = " << fmt_f64(kv_base) << "\n";
  out << "hmin = " << fmt_f64(default_h_min) << "\n";
  out << "hmax = " << fmt_f64(default_h_max) << "\n";
  if (defaults.w_p) out << "w_p = " << fmt_f64(*defaults.w_p) << "\n";
  if (defaults.horizon) out << "horizon = " << *defaults.horizon << "\n";
  if (defaults.near_optimal_kw) out << "near_optimal_kw = " << fmt_f64(*defaults.near_optimal_kw) << "\n";
  out << "[bus]\n";
  for (const auto& b : buses) out << b.id << " hmin=" << fmt_f64(b.h_min) << " hmax=" << fmt_f64(b.h_max) << "\n";
  out << "[line]\n";
  for (const auto& l : lines) {
    out << l.from << " " << l.to << " r=" << fmt_f64(l.r) << " x=" << fmt_f64(l.x);
    if (l.switchable) out << " switch=" << l.switch_id;
    out << "\n";
  }
  out << "[load]\n";
  for (const auto& d : loads) out << d.bus << " p=" << fmt_f64(d.p_kw) << " q=" << fmt_f64(d.q_kvar) << "\n";
  out << "[source]\n";
  for (const auto& s : sources) {
    out << s.bus << " kind=" << (s.kind == SourceKind::Substation ? "substation" : "dg") << " cap=" << fmt_f64(s.cap_kw);
    if (s.allowed_cells) {
      out << " allowed_cells=[";
      for (std::size_t i = 0; i < s.allowed_cells->size(); ++i) out << (i ? "," : "") << (*s.allowed_cells)[i];
      out << "]";
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace dsr
