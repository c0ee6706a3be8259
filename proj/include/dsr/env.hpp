#pragma once

#include <string>
#include <vector>

#include "dsr/cells.hpp"
#include "dsr/grid.hpp"
#include "dsr/powerflow.hpp"

namespace dsr {

struct MdpConfig {
  int horizon = 8;                 // T, in decision steps
  double gamma = 1.0;              // consumed by the actor-critic agents only
  double w_p = 100.0;              // voltage-penalty weight, kW per per-unit^2
  double delta_t = 1.0;            // step length (dimensionless)
  bool dg_shutdown_enabled = true; // restricted DGs shut down instead of filtering

  void validate() const {
    if (horizon < 1) throw ValidationError("horizon must be >= 1");
    if (gamma < 0.0 || gamma > 1.0) throw ValidationError("gamma must lie in [0,1]");
    if (w_p < 0.0) throw ValidationError("w_p must be >= 0");
    if (!(delta_t > 0.0)) throw ValidationError("delta_t must be > 0");
  }
};

// Scenario-file overrides applied on top of the built-in defaults.
inline MdpConfig mdp_config_for(const GridSpec& grid) {
  MdpConfig cfg;
  if (grid.defaults.horizon) cfg.horizon = *grid.defaults.horizon;
  if (grid.defaults.w_p) cfg.w_p = *grid.defaults.w_p;
  cfg.validate();
  return cfg;
}

// Action 0 is no-op; action k+1 closes switch edge k (CellGraph order).
struct Action {
  int id = 0;

  static Action noop() { return {0}; }
  static Action close(int switch_index) { return {switch_index + 1}; }
  bool is_noop() const { return id == 0; }
  int switch_index() const { return id - 1; }

  bool operator==(const Action&) const = default;
};

inline int action_count(const CellGraph& cg) { return cg.switch_count() + 1; }

struct RestorationState {
  std::vector<int> cell_source;           // per cell: supplying source index, -1 when dark
  std::vector<double> load_h;             // per load: squared voltage, 0.0 when de-energized
  std::vector<char> switch_closed;        // per switch edge
  std::vector<std::vector<int>> frontier; // per source: cells in energization order
  int step = 0;

  bool cell_energized(int c) const { return cell_source[static_cast<std::size_t>(c)] >= 0; }
};

struct StepResult {
  RestorationState next;
  double reward = 0.0;        // kW * delta_t, penalty-weighted
  double restored_kw = 0.0;   // total energized nominal load after the step
  double penalty = 0.0;       // sum of load voltage penalties, per-unit^2
};

namespace detail {

inline void refresh_voltages(RestorationState& s, const GridSpec& grid, const CellGraph& cg) {
  const VoltageSolution sol = solve(grid, cg, s.cell_source, s.switch_closed);
  s.load_h.assign(grid.loads.size(), 0.0);
  for (std::size_t li = 0; li < grid.loads.size(); ++li) {
    const auto it = sol.h.find(grid.load_bus_idx[li]);
    if (it != sol.h.end()) s.load_h[li] = it->second;
  }
}

inline double restored_kw(const RestorationState& s, const CellGraph& cg) {
  double total = 0.0;
  for (int c = 0; c < cg.cell_count(); ++c)
    if (s.cell_energized(c)) total += cg.cells[static_cast<std::size_t>(c)].p_kw;
  return total;
}

inline double penalty_sum(const RestorationState& s, const GridSpec& grid) {
  double total = 0.0;
  for (std::size_t li = 0; li < grid.loads.size(); ++li) {
    const double h = s.load_h[li];
    if (h == 0.0) continue;  // de-energized sentinel
    const auto bus = grid.load_bus_idx[li];
    total += std::max(0.0, h - grid.buses[bus].h_max) + std::max(0.0, grid.buses[bus].h_min - h);
  }
  return total;
}

// True when extending `source` by `cell` would leave its allowed set.
inline bool violates_restriction(const GridSpec& grid, std::size_t source, int cell) {
  const auto& allowed = grid.sources[source].allowed_cells;
  if (!allowed) return false;
  return std::find(allowed->begin(), allowed->end(), cell) == allowed->end();
}

}  // namespace detail

inline RestorationState reset(const GridSpec& grid, const CellGraph& cg, const MdpConfig& cfg) {
  cfg.validate();
  RestorationState s;
  s.cell_source.assign(cg.cells.size(), -1);
  s.switch_closed.assign(cg.switches.size(), 0);
  s.frontier.resize(cg.sources.size());
  for (const auto& at : cg.sources) {
    auto& owner = s.cell_source[static_cast<std::size_t>(at.cell)];
    if (owner >= 0)
      throw ValidationError("cell " + std::to_string(at.cell) + " contains two sources (buses " +
                            grid.sources[static_cast<std::size_t>(owner)].bus + " and " +
                            grid.sources[at.source_index].bus + ")");
    owner = static_cast<int>(at.source_index);
    s.frontier[at.source_index] = {at.cell};
  }
  detail::refresh_voltages(s, grid, cg);
  return s;
}

// No-op plus every closure of an open switch with exactly one energized
// endpoint. A closure that would take a restricted DG outside its allowed
// cells stays legal when shutdown is enabled (it triggers the shutdown) and
// is filtered out otherwise. Ordering follows ascending switch id.
inline std::vector<Action> legal_actions(const RestorationState& s, const GridSpec& grid,
                                         const CellGraph& cg, const MdpConfig& cfg) {
  std::vector<Action> out{Action::noop()};
  for (int k = 0; k < cg.switch_count(); ++k) {
    if (s.switch_closed[static_cast<std::size_t>(k)]) continue;
    const auto& e = cg.switches[static_cast<std::size_t>(k)];
    const bool ea = s.cell_energized(e.cell_a);
    const bool eb = s.cell_energized(e.cell_b);
    if (ea == eb) continue;  // loop (both live) or unreachable (both dark)
    const int live = ea ? e.cell_a : e.cell_b;
    const int dark = ea ? e.cell_b : e.cell_a;
    const auto src = static_cast<std::size_t>(s.cell_source[static_cast<std::size_t>(live)]);
    if (!cfg.dg_shutdown_enabled && detail::violates_restriction(grid, src, dark)) continue;
    out.push_back(Action::close(k));
  }
  return out;
}

inline StepResult step(const RestorationState& s, Action a, const GridSpec& grid,
                       const CellGraph& cg, const MdpConfig& cfg) {
  StepResult res;
  res.next = s;
  auto& n = res.next;

  if (a.id < 0 || a.id > cg.switch_count())
    throw std::invalid_argument("action id " + std::to_string(a.id) + " outside action space of size " +
                                std::to_string(action_count(cg)));

  if (!a.is_noop()) {
    const int k = a.switch_index();
    const auto& e = cg.switches[static_cast<std::size_t>(k)];
    if (s.switch_closed[static_cast<std::size_t>(k)])
      throw std::invalid_argument("switch '" + e.switch_id + "' is already closed");
    const bool ea = s.cell_energized(e.cell_a);
    const bool eb = s.cell_energized(e.cell_b);
    if (ea && eb)
      throw std::invalid_argument("closing switch '" + e.switch_id + "' would form a loop between energized cells");
    if (!ea && !eb)
      throw std::invalid_argument("closing switch '" + e.switch_id + "' connects two de-energized cells");
    const int live = ea ? e.cell_a : e.cell_b;
    const int dark = ea ? e.cell_b : e.cell_a;
    const auto src = static_cast<std::size_t>(s.cell_source[static_cast<std::size_t>(live)]);
    const bool violates = detail::violates_restriction(grid, src, dark);
    if (violates && !cfg.dg_shutdown_enabled)
      throw std::invalid_argument("closing switch '" + e.switch_id + "' leaves the allowed cells of source at bus " +
                                  grid.sources[src].bus);

    if (violates) {
      // The DG shuts down: its whole island goes dark before the reward is
      // evaluated. Switches inside the island reopen and the frontier
      // clears, so the cells become reachable again for other sources; the
      // triggering switch never ends up closed.
      std::vector<char> in_island(cg.cells.size(), 0);
      for (int c : n.frontier[src]) {
        in_island[static_cast<std::size_t>(c)] = 1;
        n.cell_source[static_cast<std::size_t>(c)] = -1;
      }
      for (std::size_t j = 0; j < cg.switches.size(); ++j) {
        const auto& se = cg.switches[j];
        if (n.switch_closed[j] && in_island[static_cast<std::size_t>(se.cell_a)] &&
            in_island[static_cast<std::size_t>(se.cell_b)])
          n.switch_closed[j] = 0;
      }
      n.frontier[src].clear();
    } else {
      n.switch_closed[static_cast<std::size_t>(k)] = 1;
      n.cell_source[static_cast<std::size_t>(dark)] = static_cast<int>(src);
      n.frontier[src].push_back(dark);
    }
    detail::refresh_voltages(n, grid, cg);
  }

  n.step = s.step + 1;
  res.restored_kw = detail::restored_kw(n, cg);
  res.penalty = detail::penalty_sum(n, grid);
  // Eq-style reward: active restoration term plus weighted (negative)
  // voltage-penalty term, both scaled by the step length.
  res.reward = res.restored_kw * cfg.delta_t - cfg.w_p * res.penalty * cfg.delta_t;
  return res;
}

inline bool episode_done(const RestorationState& s, const MdpConfig& cfg) { return s.step >= cfg.horizon; }

// Deterministic observation layout:
//   [cell energization bits | per-load H | per-switch open/closed one-hot |
//    per-source-per-cell frontier bits | restored-power fraction]
inline std::size_t encoded_state_size(const GridSpec& grid, const CellGraph& cg) {
  return cg.cells.size() + grid.loads.size() + 2 * cg.switches.size() +
         cg.sources.size() * cg.cells.size() + 1;
}

inline std::vector<double> encode_state(const RestorationState& s, const GridSpec& grid, const CellGraph& cg) {
  std::vector<double> v;
  v.reserve(encoded_state_size(grid, cg));
  for (int c = 0; c < cg.cell_count(); ++c) v.push_back(s.cell_energized(c) ? 1.0 : 0.0);
  for (double h : s.load_h) v.push_back(h);
  for (char closed : s.switch_closed) {
    v.push_back(closed ? 0.0 : 1.0);
    v.push_back(closed ? 1.0 : 0.0);
  }
  for (const auto& front : s.frontier) {
    std::vector<char> bit(cg.cells.size(), 0);
    for (int c : front) bit[static_cast<std::size_t>(c)] = 1;
    for (char b : bit) v.push_back(b ? 1.0 : 0.0);
  }
  const double total = grid.total_load_kw();
  v.push_back(total > 0.0 ? detail::restored_kw(s, cg) / total : 0.0);
  return v;
}

}  // namespace dsr
