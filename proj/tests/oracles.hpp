#pragma once

// Independent reference computations used by the tests. These deliberately
// avoid the library's own solution paths: policies are enumerated and solved
// as linear systems, shortest paths come from Dijkstra, and window counts
// come from literal slot scanning.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "dalc/mdp.hpp"

namespace oracles {

struct PolicyOracleResult {
  std::vector<double> value;  // optimal expected cost per state, h-major
  std::vector<std::optional<dalc::ActionKind>> action;
};

// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve_linear(std::vector<std::vector<double>> a,
                                        std::vector<double> b) {
  const int n = static_cast<int>(b.size());
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-14)
      throw std::runtime_error("singular policy system");
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return x;
}

// Expected total cost of one fixed deterministic policy, by solving its
// linear fixed-point equations exactly.
inline std::vector<double> policy_value(
    const dalc::MdpModel& model,
    const std::vector<std::optional<dalc::ActionKind>>& policy) {
  const int n = model.state_count();
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  std::vector<double> b(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const dalc::SearchState s = model.state_at(i);
    if (model.is_terminal(s)) {
      a[i][i] = 1.0;
      b[i] = 0.0;
      continue;
    }
    const dalc::ActionKind act = *policy[i];
    const double p = act == dalc::ActionKind::IncreaseEpochs ? model.alpha(s)
                                                             : model.beta(s);
    const double cost = dalc::action_cost(s, act, model);
    const int succ = model.state_index(dalc::success_state(s, act));
    const double g = model.gamma();
    // V(s) = cost + g * (p * V(succ) + (1 - p) * V(s))
    a[i][i] = 1.0 - g * (1.0 - p);
    a[i][succ] -= g * p;
    b[i] = cost;
  }
  return solve_linear(std::move(a), std::move(b));
}

// Enumerates every deterministic policy, solves each exactly, and keeps the
// per-state minimum. The greedy action is then re-derived from the optimal
// values with the IncreaseEpochs-first tie-break.
inline PolicyOracleResult enumerate_policies(const dalc::MdpModel& model) {
  const int n = model.state_count();
  std::vector<int> choice_states;  // states with both actions available
  std::vector<std::optional<dalc::ActionKind>> base(n);
  for (int i = 0; i < n; ++i) {
    const dalc::SearchState s = model.state_at(i);
    if (model.is_terminal(s)) continue;
    const bool inc =
        model.action_available(s, dalc::ActionKind::IncreaseEpochs);
    const bool add = model.action_available(s, dalc::ActionKind::AddLayer);
    if (inc && add)
      choice_states.push_back(i);
    else
      base[i] = inc ? dalc::ActionKind::IncreaseEpochs
                    : dalc::ActionKind::AddLayer;
  }

  PolicyOracleResult best;
  best.value.assign(n, std::numeric_limits<double>::infinity());
  const std::uint64_t combos = 1ULL << choice_states.size();
  for (std::uint64_t mask = 0; mask < combos; ++mask) {
    auto policy = base;
    for (size_t k = 0; k < choice_states.size(); ++k)
      policy[choice_states[k]] = (mask >> k) & 1
                                     ? dalc::ActionKind::AddLayer
                                     : dalc::ActionKind::IncreaseEpochs;
    const std::vector<double> v = policy_value(model, policy);
    for (int i = 0; i < n; ++i) best.value[i] = std::min(best.value[i], v[i]);
  }

  best.action.assign(n, std::nullopt);
  for (int i = 0; i < n; ++i) {
    const dalc::SearchState s = model.state_at(i);
    if (model.is_terminal(s)) continue;
    double best_q = std::numeric_limits<double>::infinity();
    for (dalc::ActionKind a :
         {dalc::ActionKind::IncreaseEpochs, dalc::ActionKind::AddLayer}) {
      if (!model.action_available(s, a)) continue;
      const double p = a == dalc::ActionKind::IncreaseEpochs ? model.alpha(s)
                                                             : model.beta(s);
      const double cost = dalc::action_cost(s, a, model);
      const int succ = model.state_index(dalc::success_state(s, a));
      const double q =
          cost + model.gamma() *
                     (p * best.value[succ] + (1.0 - p) * best.value[i]);
      if (q < best_q) {
        best_q = q;
        best.action[i] = a;
      }
    }
  }
  return best;
}

// Cheapest action-path cost from every state to the terminal state when all
// transitions succeed (alpha = beta = 1), via Dijkstra on reversed edges.
inline std::vector<double> shortest_path_to_terminal(
    const dalc::MdpModel& model) {
  const int n = model.state_count();
  struct Edge {
    int from;
    double cost;
  };
  std::vector<std::vector<Edge>> reverse_adj(n);
  for (int i = 0; i < n; ++i) {
    const dalc::SearchState s = model.state_at(i);
    for (dalc::ActionKind a :
         {dalc::ActionKind::IncreaseEpochs, dalc::ActionKind::AddLayer}) {
      if (!model.action_available(s, a)) continue;
      const int succ = model.state_index(dalc::success_state(s, a));
      reverse_adj[succ].push_back(Edge{i, dalc::action_cost(s, a, model)});
    }
  }
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  const int terminal =
      model.state_index(dalc::SearchState{model.max_layers(),
                                          model.epoch_steps()});
  dist[terminal] = 0.0;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  heap.emplace(0.0, terminal);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (const Edge& e : reverse_adj[u]) {
      const double cand = e.cost + dist[u];
      if (cand < dist[e.from]) {
        dist[e.from] = cand;
        heap.emplace(cand, e.from);
      }
    }
  }
  return dist;
}

// Reference AARE evaluated in extended precision.
inline double aare_reference(const std::vector<double>& observed,
                             const std::vector<double>& predicted) {
  long double sum = 0.0L;
  for (size_t i = 0; i < observed.size(); ++i)
    sum += std::abs(static_cast<long double>(observed[i]) - predicted[i]) /
           observed[i];
  return static_cast<double>(sum / observed.size());
}

// Literal re-derivation of per-day usable slots and window count: a missing
// run is fillable iff it has a present predecessor and is at most max_fill
// long; a window needs window_len + 1 consecutive usable slots.
inline int count_windows(const std::vector<bool>& present, int window_len,
                         int max_fill) {
  const int n = static_cast<int>(present.size());
  std::vector<bool> usable(n, false);
  for (int i = 0; i < n; ++i) {
    if (present[i]) {
      usable[i] = true;
      continue;
    }
    int start = i;
    while (i + 1 < n && !present[i + 1]) ++i;
    const int len = i - start + 1;
    if (start > 0 && len <= max_fill)
      for (int s = start; s <= i; ++s) usable[s] = true;
  }
  int count = 0;
  for (int p = 0; p + window_len < n; ++p) {
    bool ok = true;
    for (int s = p; s <= p + window_len; ++s) ok = ok && usable[s];
    if (ok) ++count;
  }
  return count;
}

}  // namespace oracles
