#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "dsr/grid.hpp"
#include "dsr/util.hpp"

namespace dsr {

// A node cell: a maximal set of buses joined by non-switchable lines.
// Everything in a cell energizes atomically.
struct Cell {
  std::vector<std::size_t> bus_indices;     // ascending
  std::vector<std::size_t> load_indices;    // declaration order
  double p_kw = 0.0;                        // aggregate nominal active power
};

struct SwitchEdge {
  std::string switch_id;
  std::size_t line_index = 0;
  int cell_a = 0;
  int cell_b = 0;
};

struct SourceAttachment {
  std::size_t source_index = 0;
  int cell = 0;
};

struct CellGraph {
  std::vector<Cell> cells;
  std::vector<SwitchEdge> switches;         // ordered by switch id
  std::vector<SourceAttachment> sources;    // source declaration order
  std::vector<int> cell_of_bus;             // bus index -> cell id

  int cell_count() const { return static_cast<int>(cells.size()); }
  int switch_count() const { return static_cast<int>(switches.size()); }

  double cell_power(int cell) const {
    if (cell < 0 || cell >= cell_count())
      throw ValidationError("unknown cell id " + std::to_string(cell));
    return cells[static_cast<std::size_t>(cell)].p_kw;
  }
};

// Decomposes the network into node cells: connected components of the
// subgraph left after deleting every switchable line. Cells are numbered by
// ascending minimum bus id so the decomposition is reproducible.
inline CellGraph node_cells(const GridSpec& grid) {
  const std::size_t n = grid.buses.size();

  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < grid.lines.size(); ++i) {
    if (grid.lines[i].switchable) continue;
    adj[grid.line_from_idx[i]].push_back(grid.line_to_idx[i]);
    adj[grid.line_to_idx[i]].push_back(grid.line_from_idx[i]);
  }

  std::vector<int> comp(n, -1);
  int n_comp = 0;
  for (std::size_t start = 0; start < n; ++start) {
    if (comp[start] >= 0) continue;
    comp[start] = n_comp;
    std::vector<std::size_t> stack{start};
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (auto v : adj[u])
        if (comp[v] < 0) {
          comp[v] = n_comp;
          stack.push_back(v);
        }
    }
    ++n_comp;
  }

  // Renumber components by their minimum bus id.
  std::vector<std::size_t> min_bus(static_cast<std::size_t>(n_comp), SIZE_MAX);
  for (std::size_t b = 0; b < n; ++b) {
    auto& m = min_bus[static_cast<std::size_t>(comp[b])];
    if (m == SIZE_MAX || id_less(grid.buses[b].id, grid.buses[m].id)) m = b;
  }
  std::vector<int> order(static_cast<std::size_t>(n_comp));
  for (int c = 0; c < n_comp; ++c) order[static_cast<std::size_t>(c)] = c;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return id_less(grid.buses[min_bus[static_cast<std::size_t>(a)]].id,
                   grid.buses[min_bus[static_cast<std::size_t>(b)]].id);
  });
  std::vector<int> renum(static_cast<std::size_t>(n_comp));
  for (int rank = 0; rank < n_comp; ++rank) renum[static_cast<std::size_t>(order[static_cast<std::size_t>(rank)])] = rank;

  CellGraph cg;
  cg.cells.resize(static_cast<std::size_t>(n_comp));
  cg.cell_of_bus.resize(n);
  for (std::size_t b = 0; b < n; ++b) {
    const int c = renum[static_cast<std::size_t>(comp[b])];
    cg.cell_of_bus[b] = c;
    cg.cells[static_cast<std::size_t>(c)].bus_indices.push_back(b);
  }
  for (std::size_t li = 0; li < grid.loads.size(); ++li) {
    const int c = cg.cell_of_bus[grid.load_bus_idx[li]];
    auto& cell = cg.cells[static_cast<std::size_t>(c)];
    cell.load_indices.push_back(li);
    cell.p_kw += grid.loads[li].p_kw;  // declaration order == ascending load id
  }

  for (std::size_t i = 0; i < grid.lines.size(); ++i) {
    if (!grid.lines[i].switchable) continue;
    const int ca = cg.cell_of_bus[grid.line_from_idx[i]];
    const int cb = cg.cell_of_bus[grid.line_to_idx[i]];
    if (ca == cb) continue;  // a switch inside one cell can never be operated
    SwitchEdge e;
    e.switch_id = grid.lines[i].switch_id;
    e.line_index = i;
    e.cell_a = std::min(ca, cb);
    e.cell_b = std::max(ca, cb);
    cg.switches.push_back(std::move(e));
  }
  std::sort(cg.switches.begin(), cg.switches.end(),
            [](const SwitchEdge& a, const SwitchEdge& b) { return id_less(a.switch_id, b.switch_id); });

  for (std::size_t si = 0; si < grid.sources.size(); ++si) {
    SourceAttachment at;
    at.source_index = si;
    at.cell = cg.cell_of_bus[grid.source_bus_idx[si]];
    cg.sources.push_back(at);
    if (const auto& allowed = grid.sources[si].allowed_cells) {
      for (int c : *allowed)
        if (c < 0 || c >= cg.cell_count())
          throw ValidationError("source at bus " + grid.sources[si].bus + " allows unknown cell " + std::to_string(c));
      if (std::find(allowed->begin(), allowed->end(), at.cell) == allowed->end())
        throw ValidationError("source at bus " + grid.sources[si].bus + " does not allow its own cell " + std::to_string(at.cell));
    }
  }
  return cg;
}

}  // namespace dsr
