#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include "dsr/cells.hpp"
#include "dsr/grid.hpp"

namespace dsr {

struct Island {
  std::size_t source_index = 0;
  std::vector<std::size_t> bus_indices;  // ascending
  double load_kw = 0.0;
  bool feasible = true;  // island active load within source capacity
};

struct VoltageSolution {
  // Squared voltage magnitude per energized bus; de-energized buses absent.
  std::map<std::size_t, double> h;
  std::vector<Island> islands;  // ordered by source index

  bool energized(std::size_t bus) const { return h.count(bus) != 0; }
};

// Linearized DistFlow on each energized island: branch flows are the sums of
// downstream nominal load (losses neglected) and squared voltage drops as
// H_child = H_parent - 2 (r P + x Q) in per-unit. Each island must be a tree
// rooted at its source bus; the environment's loop prevention guarantees
// that, so a non-tree island here means the caller broke an invariant.
//
// `cell_source[c]` is the supplying source index for energized cell c, or -1
// when the cell is dark. `switch_closed[k]` follows CellGraph switch order.
inline VoltageSolution solve(const GridSpec& grid, const CellGraph& cg,
                             const std::vector<int>& cell_source,
                             const std::vector<char>& switch_closed) {
  if (cell_source.size() != cg.cells.size())
    throw std::invalid_argument("cell_source size " + std::to_string(cell_source.size()) +
                                " does not match cell count " + std::to_string(cg.cells.size()));
  if (switch_closed.size() != cg.switches.size())
    throw std::invalid_argument("switch_closed size " + std::to_string(switch_closed.size()) +
                                " does not match switch count " + std::to_string(cg.switches.size()));

  VoltageSolution sol;
  const std::size_t n_bus = grid.buses.size();

  // Per-bus nominal injections in per-unit.
  std::vector<double> p_pu(n_bus, 0.0), q_pu(n_bus, 0.0);
  for (std::size_t li = 0; li < grid.loads.size(); ++li) {
    p_pu[grid.load_bus_idx[li]] += grid.loads[li].p_kw / grid.kva_base;
    q_pu[grid.load_bus_idx[li]] += grid.loads[li].q_kvar / grid.kva_base;
  }

  for (const auto& at : cg.sources) {
    std::vector<int> island_cells;
    for (int c = 0; c < cg.cell_count(); ++c)
      if (cell_source[static_cast<std::size_t>(c)] == static_cast<int>(at.source_index)) island_cells.push_back(c);
    if (island_cells.empty()) continue;

    Island isl;
    isl.source_index = at.source_index;

    std::vector<char> in_island(n_bus, 0);
    for (int c : island_cells)
      for (auto b : cg.cells[static_cast<std::size_t>(c)].bus_indices) {
        in_island[b] = 1;
        isl.bus_indices.push_back(b);
      }
    std::sort(isl.bus_indices.begin(), isl.bus_indices.end());

    // Island edges: non-switchable lines inside member cells plus closed
    // switches between member cells.
    struct Edge {
      std::size_t to;
      double r, x;
    };
    std::vector<std::vector<Edge>> adj(n_bus);
    std::size_t edge_count = 0;
    auto add_edge = [&](std::size_t li) {
      const auto a = grid.line_from_idx[li], b = grid.line_to_idx[li];
      adj[a].push_back({b, grid.lines[li].r, grid.lines[li].x});
      adj[b].push_back({a, grid.lines[li].r, grid.lines[li].x});
      ++edge_count;
    };
    for (std::size_t li = 0; li < grid.lines.size(); ++li) {
      if (grid.lines[li].switchable) continue;
      if (in_island[grid.line_from_idx[li]] && in_island[grid.line_to_idx[li]]) add_edge(li);
    }
    for (std::size_t k = 0; k < cg.switches.size(); ++k) {
      if (!switch_closed[k]) continue;
      const auto li = cg.switches[k].line_index;
      if (in_island[grid.line_from_idx[li]] && in_island[grid.line_to_idx[li]]) add_edge(li);
    }
    for (auto& edges : adj) std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.to < b.to; });

    const std::size_t root = grid.source_bus_idx[at.source_index];
    if (!in_island[root]) throw std::logic_error("island does not contain its source bus");

    // Root the island; a revisit or a leftover bus means it is not a tree.
    std::vector<std::size_t> order;
    std::vector<std::size_t> parent(n_bus, SIZE_MAX);
    std::vector<double> branch_r(n_bus, 0.0), branch_x(n_bus, 0.0);
    std::vector<char> seen(n_bus, 0);
    order.push_back(root);
    seen[root] = 1;
    for (std::size_t head = 0; head < order.size(); ++head) {
      const auto u = order[head];
      for (const auto& e : adj[u]) {
        if (e.to == parent[u]) continue;
        if (seen[e.to]) throw std::logic_error("energized island contains a loop (environment invariant breached)");
        seen[e.to] = 1;
        parent[e.to] = u;
        branch_r[e.to] = e.r;
        branch_x[e.to] = e.x;
        order.push_back(e.to);
      }
    }
    if (order.size() != isl.bus_indices.size() || edge_count != isl.bus_indices.size() - 1)
      throw std::logic_error("energized island is not a connected tree (environment invariant breached)");

    // Downstream accumulation: subtree load behind every bus.
    std::vector<double> sub_p(n_bus, 0.0), sub_q(n_bus, 0.0);
    for (std::size_t i = order.size(); i-- > 0;) {
      const auto u = order[i];
      sub_p[u] += p_pu[u];
      sub_q[u] += q_pu[u];
      if (parent[u] != SIZE_MAX) {
        sub_p[parent[u]] += sub_p[u];
        sub_q[parent[u]] += sub_q[u];
      }
    }

    sol.h[root] = 1.0;  // slack at nominal voltage
    for (std::size_t i = 1; i < order.size(); ++i) {
      const auto u = order[i];
      const double hp = sol.h[parent[u]];
      sol.h[u] = hp - 2.0 * (branch_r[u] * sub_p[u] + branch_x[u] * sub_q[u]);
    }

    isl.load_kw = sub_p[root] * grid.kva_base;
    isl.feasible = isl.load_kw <= grid.sources[at.source_index].cap_kw;
    sol.islands.push_back(std::move(isl));
  }
  return sol;
}

// Per-load voltage penalty of an energized load:
//   V = max(0, H - Hmax) + max(0, Hmin - H)
// De-energized loads are absent from the result.
inline std::map<std::size_t, double> voltage_penalty(const VoltageSolution& sol, const GridSpec& grid) {
  std::map<std::size_t, double> out;
  for (std::size_t li = 0; li < grid.loads.size(); ++li) {
    const auto bus = grid.load_bus_idx[li];
    const auto it = sol.h.find(bus);
    if (it == sol.h.end()) continue;
    const double h = it->second;
    const double lo = grid.buses[bus].h_min, hi = grid.buses[bus].h_max;
    out[li] = std::max(0.0, h - hi) + std::max(0.0, lo - h);
  }
  return out;
}

}  // namespace dsr
