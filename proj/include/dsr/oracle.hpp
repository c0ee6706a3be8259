#pragma once

#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "dsr/env.hpp"

namespace dsr {

enum class OracleMetric { Return, FinalPower };

struct OracleResult {
  double best_return = 0.0;       // kW * delta_t summed over the horizon
  double best_final_power = 0.0;  // kW restored when the episode ends
  // Every action sequence attaining the optimum of the chosen metric, in
  // lexicographic action-id order (truncated at the listing cap). Under the
  // return metric best_final_power is the best final power among these
  // sequences, and vice versa.
  std::vector<std::vector<Action>> best_sequences;
  std::size_t states_visited = 0;
  bool sequences_truncated = false;
};

namespace detail {

inline std::string canonical_key(const RestorationState& s) {
  std::string key;
  key.reserve(2 * s.cell_source.size() + s.switch_closed.size() + 2);
  for (int src : s.cell_source) key += static_cast<char>(src + 2);
  key += '|';
  for (char c : s.switch_closed) key += static_cast<char>('0' + c);
  return key;
}

struct OracleSearch {
  const GridSpec& grid;
  const CellGraph& cg;
  const MdpConfig& cfg;
  OracleMetric metric;
  std::size_t max_sequences;

  std::unordered_map<std::string, double> memo;
  // Shutdowns reopen switches, so two closure-only paths can reach the same
  // canonical state at different depths; only then does the final-power memo
  // need the step in its key.
  bool key_needs_step = false;

  double total_power = 0.0;

  explicit OracleSearch(const GridSpec& g, const CellGraph& c, const MdpConfig& f, OracleMetric m,
                        std::size_t cap)
      : grid(g), cg(c), cfg(f), metric(m), max_sequences(cap) {
    for (const auto& cell : cg.cells) total_power += cell.p_kw;
    if (cfg.dg_shutdown_enabled)
      for (const auto& s : grid.sources)
        if (s.allowed_cells) key_needs_step = true;
  }

  std::string memo_key(const RestorationState& s) const {
    std::string key = canonical_key(s);
    if (metric == OracleMetric::Return || key_needs_step) key += ':' + std::to_string(s.step);
    return key;
  }

  // Exact optimum from `s`. For the return metric this walks the full action
  // space; for final power no-ops never help (closures stay legal if
  // deferred), so the closure-only subtree is sufficient.
  double value(const RestorationState& s) {
    if (s.step >= cfg.horizon) {
      if (metric == OracleMetric::Return) return 0.0;
      return restored_kw(s, cg);
    }
    const std::string key = memo_key(s);
    const auto it = memo.find(key);
    if (it != memo.end()) return it->second;

    double best = -std::numeric_limits<double>::infinity();
    for (const Action a : legal_actions(s, grid, cg, cfg)) {
      if (metric == OracleMetric::FinalPower && a.is_noop()) {
        // Equivalent to freezing here for the rest of the episode.
        best = std::max(best, restored_kw(s, cg));
        continue;
      }
      const StepResult r = step(s, a, grid, cg, cfg);
      const double v = value(r.next);
      best = std::max(best, metric == OracleMetric::Return ? r.reward + v : v);
    }
    memo.emplace(key, best);
    return best;
  }

  // Enumerates, in lexicographic order, every full-length action sequence
  // attaining `target`. The admissible bound keeps this cheap at desk scale.
  // Returns are accumulated left-to-right here (the canonical episode
  // order), so reported values are bit-identical to a straight replay.
  void collect(const RestorationState& s, double running_return, double target,
               std::vector<Action>& prefix, OracleResult& out) {
    if (out.best_sequences.size() >= max_sequences) {
      out.sequences_truncated = true;
      return;
    }
    if (s.step >= cfg.horizon) {
      const double achieved = metric == OracleMetric::Return ? running_return : restored_kw(s, cg);
      if (achieved >= target - 1e-9) {
        out.best_sequences.push_back(prefix);
        out.best_return = std::max(out.best_return, running_return);
        out.best_final_power = std::max(out.best_final_power, restored_kw(s, cg));
      }
      return;
    }
    if (optimistic_value(s, running_return) < target - 1e-9) return;

    for (const Action a : legal_actions(s, grid, cg, cfg)) {
      const StepResult r = step(s, a, grid, cg, cfg);
      prefix.push_back(a);
      collect(r.next, running_return + r.reward, target, prefix, out);
      prefix.pop_back();
    }
  }
};

}  // namespace detail

// Exhaustive ground truth: depth-first search over legal actions to the
// horizon, memoized on the canonical (energized cells with sources, closed
// switches) state. Refuses scenarios above `max_cells`.
inline OracleResult enumerate_optimal(const GridSpec& grid, const CellGraph& cg, const MdpConfig& cfg,
                                      OracleMetric metric, int max_cells = 16,
                                      std::size_t max_sequences = 1024) {
  if (cg.cell_count() > max_cells)
    throw ValidationError("scenario has " + std::to_string(cg.cell_count()) + " cells, above the enumeration bound of " +
                          std::to_string(max_cells) + "; shrink the scenario or raise the bound");

  detail::OracleSearch search(grid, cg, cfg, metric, max_sequences);
  const RestorationState root = reset(grid, cg, cfg);
  const double best = search.value(root);

  OracleResult out;
  out.states_visited = search.memo.size();
  out.best_return = -std::numeric_limits<double>::infinity();
  out.best_final_power = -std::numeric_limits<double>::infinity();
  std::vector<Action> prefix;
  search.collect(root, 0.0, best, prefix, out);
  return out;
}

}  // namespace dsr
