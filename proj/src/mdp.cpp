#include "dalc/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace dalc {

const char* to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::IncreaseEpochs:
      return "increase_epochs";
    case ActionKind::AddLayer:
      return "add_layer";
  }
  return "?";
}

ActionKind action_from_string(std::string_view name) {
  if (name == "increase_epochs") return ActionKind::IncreaseEpochs;
  if (name == "add_layer") return ActionKind::AddLayer;
  throw ConfigError("unknown action name: " + std::string(name));
}

namespace {

double clamp_prob(double p) {
  if (!std::isfinite(p) || p <= 0.0 || p > 1.0)
    throw ConfigError("transition probability must be in (0, 1], got " +
                      std::to_string(p));
  return std::max(p, kProbFloor);
}

}  // namespace

MdpModel::MdpModel(int max_layers, int max_epochs, int epoch_increment,
                   std::vector<double> epoch_time_seconds, double alpha,
                   double beta, double gamma, double theta)
    : n_(max_layers),
      k_(max_epochs),
      e_(epoch_increment),
      gamma_(gamma),
      theta_(theta),
      epoch_time_(std::move(epoch_time_seconds)) {
  if (n_ < 1) throw ConfigError("max layers n must be >= 1");
  if (e_ < 1) throw ConfigError("epoch increment e must be >= 1");
  if (k_ < e_ || k_ % e_ != 0)
    throw ConfigError("max epochs k must be a positive multiple of e");
  if (!(gamma_ > 0.0 && gamma_ <= 1.0))
    throw ConfigError("gamma must be in (0, 1]");
  if (!(theta_ > 0.0)) throw ConfigError("theta must be positive");
  if (static_cast<int>(epoch_time_.size()) != n_)
    throw ConfigError("epoch_time must list exactly n per-layer times");
  for (double t : epoch_time_)
    if (!(t > 0.0) || !std::isfinite(t))
      throw ConfigError("per-epoch times must be positive");
  steps_ = k_ / e_;
  alpha_.assign(static_cast<size_t>(n_) * steps_, clamp_prob(alpha));
  beta_.assign(static_cast<size_t>(n_) * steps_, clamp_prob(beta));
}

void MdpModel::check_state(const SearchState& s) const {
  if (s.layers < 1 || s.layers > n_ || s.epoch_multiple < 1 ||
      s.epoch_multiple > steps_)
    throw DomainError("state (" + std::to_string(s.layers) + ", " +
                      std::to_string(s.epoch_multiple) +
                      ") outside the model geometry");
}

int MdpModel::state_index(const SearchState& s) const {
  check_state(s);
  return (s.layers - 1) * steps_ + (s.epoch_multiple - 1);
}

SearchState MdpModel::state_at(int index) const {
  if (index < 0 || index >= state_count())
    throw DomainError("state index out of range");
  return SearchState{index / steps_ + 1, index % steps_ + 1};
}

double MdpModel::alpha(const SearchState& s) const {
  return alpha_[state_index(s)];
}

double MdpModel::beta(const SearchState& s) const {
  return beta_[state_index(s)];
}

double MdpModel::epoch_time(int layers) const {
  if (layers < 1 || layers > n_)
    throw DomainError("epoch_time queried for layer count outside 1..n");
  return epoch_time_[layers - 1];
}

void MdpModel::set_alpha(const SearchState& s, double value) {
  alpha_[state_index(s)] = clamp_prob(value);
}

void MdpModel::set_beta(const SearchState& s, double value) {
  beta_[state_index(s)] = clamp_prob(value);
}

void MdpModel::set_theta(double theta) {
  if (!(theta > 0.0)) throw ConfigError("theta must be positive");
  theta_ = theta;
}

void MdpModel::set_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw ConfigError("gamma must be in (0, 1]");
  gamma_ = gamma;
}

void MdpModel::scale_epoch_times(double factor) {
  if (!(factor > 0.0)) throw ConfigError("scale factor must be positive");
  for (double& t : epoch_time_) t *= factor;
}

bool MdpModel::is_terminal(const SearchState& s) const {
  check_state(s);
  return s.layers == n_ && s.epoch_multiple == steps_;
}

bool MdpModel::action_available(const SearchState& s, ActionKind a) const {
  check_state(s);
  if (a == ActionKind::IncreaseEpochs) return s.epoch_multiple < steps_;
  return s.layers < n_;
}

int PolicyTable::state_index(const SearchState& s) const {
  if (s.layers < 1 || s.layers > max_layers || s.epoch_multiple < 1 ||
      s.epoch_multiple > epoch_steps)
    throw DomainError("state outside the policy table");
  return (s.layers - 1) * epoch_steps + (s.epoch_multiple - 1);
}

double PolicyTable::value_at(const SearchState& s) const {
  return value[state_index(s)];
}

bool PolicyTable::covers(const MdpModel& model) const {
  return max_layers == model.max_layers() &&
         epoch_steps == model.epoch_steps() &&
         static_cast<int>(value.size()) == model.state_count() &&
         static_cast<int>(action.size()) == model.state_count();
}

std::vector<SearchState> build_state_space(const MdpModel& model) {
  std::vector<SearchState> states;
  states.reserve(model.state_count());
  for (int h = 1; h <= model.max_layers(); ++h)
    for (int j = 1; j <= model.epoch_steps(); ++j)
      states.push_back(SearchState{h, j});
  return states;
}

SearchState success_state(const SearchState& s, ActionKind a) {
  if (a == ActionKind::IncreaseEpochs)
    return SearchState{s.layers, s.epoch_multiple + 1};
  return SearchState{s.layers + 1, 1};
}

double action_cost(const SearchState& s, ActionKind a, const MdpModel& model) {
  if (a == ActionKind::IncreaseEpochs) {
    // Full retraining at (j+1)*e epochs with the current layer count.
    return static_cast<double>(s.epoch_multiple + 1) *
           model.epoch_increment() * model.epoch_time(s.layers);
  }
  // Retraining from scratch with one more layer at the base epoch count.
  return static_cast<double>(model.epoch_increment()) *
         model.epoch_time(s.layers + 1);
}

std::vector<TransitionOutcome> transitions(const SearchState& s, ActionKind a,
                                           const MdpModel& model) {
  if (!model.action_available(s, a))
    throw DomainError(std::string("action ") + to_string(a) +
                      " unavailable in state (" + std::to_string(s.layers) +
                      ", " + std::to_string(s.epoch_multiple) + ")");
  const double p =
      a == ActionKind::IncreaseEpochs ? model.alpha(s) : model.beta(s);
  const double cost = action_cost(s, a, model);
  return {TransitionOutcome{success_state(s, a), p, cost},
          TransitionOutcome{s, 1.0 - p, cost}};
}

PolicyTable value_iteration(const MdpModel& model, int max_sweeps) {
  if (max_sweeps < 1) throw ConfigError("sweep cap must be >= 1");
  const int count = model.state_count();
  const double gamma = model.gamma();

  std::vector<double> v(count, 0.0);
  std::vector<double> next(count, 0.0);
  const auto states = build_state_space(model);

  constexpr ActionKind kOrder[] = {ActionKind::IncreaseEpochs,
                                   ActionKind::AddLayer};

  double residual = std::numeric_limits<double>::infinity();
  int sweep = 0;
  while (true) {
    ++sweep;
    residual = 0.0;
    for (int i = 0; i < count; ++i) {
      const SearchState& s = states[i];
      if (model.is_terminal(s)) {
        next[i] = 0.0;
        continue;
      }
      double best = std::numeric_limits<double>::infinity();
      for (ActionKind a : kOrder) {
        if (!model.action_available(s, a)) continue;
        const double p =
            a == ActionKind::IncreaseEpochs ? model.alpha(s) : model.beta(s);
        const double cost = action_cost(s, a, model);
        const double q = cost + gamma * (p * v[model.state_index(
                                                 success_state(s, a))] +
                                         (1.0 - p) * v[i]);
        if (q < best) best = q;
      }
      next[i] = best;
      residual = std::max(residual, std::abs(next[i] - v[i]));
    }
    v.swap(next);
    if (residual < model.theta()) break;
    if (sweep >= max_sweeps)
      throw ConvergenceError(
          "value iteration did not converge in " + std::to_string(max_sweeps) +
              " sweeps (residual " + std::to_string(residual) + ")",
          residual);
  }

  PolicyTable table;
  table.max_layers = model.max_layers();
  table.epoch_steps = model.epoch_steps();
  table.value = v;
  table.action.assign(count, std::nullopt);
  table.iterations = sweep;
  for (int i = 0; i < count; ++i) {
    const SearchState& s = states[i];
    if (model.is_terminal(s)) continue;
    double best = std::numeric_limits<double>::infinity();
    std::optional<ActionKind> best_action;
    for (ActionKind a : kOrder) {
      if (!model.action_available(s, a)) continue;
      const double p =
          a == ActionKind::IncreaseEpochs ? model.alpha(s) : model.beta(s);
      const double cost = action_cost(s, a, model);
      const double q =
          cost + gamma * (p * v[model.state_index(success_state(s, a))] +
                          (1.0 - p) * v[i]);
      if (q < best) {  // strict: first listed action wins ties
        best = q;
        best_action = a;
      }
    }
    table.action[i] = best_action;
  }
  return table;
}

ActionKind suggest_action(const PolicyTable& policy, const SearchState& s) {
  const auto& a = policy.action[policy.state_index(s)];
  if (!a)
    throw DomainError("no action stored for terminal state (" +
                      std::to_string(s.layers) + ", " +
                      std::to_string(s.epoch_multiple) + ")");
  return *a;
}

namespace {

std::string trim(std::string_view sv) {
  size_t b = sv.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  size_t e = sv.find_last_not_of(" \t\r\n");
  return std::string(sv.substr(b, e - b + 1));
}

double parse_number(const std::string& text, const std::string& key) {
  try {
    size_t pos = 0;
    double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse number '" +
                      text + "'");
  }
}

std::vector<double> parse_number_list(const std::string& text,
                                      const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(trim(item), key));
  return out;
}

}  // namespace

MdpModel load_mdp_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);

  std::optional<int> n, k, e;
  double gamma = 1.0, theta = 1.0, alpha = 0.5, beta = 0.5;
  std::vector<double> epoch_times;
  std::string prob_table;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    std::string stripped = trim(line);
    if (stripped.empty()) continue;
    auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    std::string key = trim(stripped.substr(0, eq));
    std::string val = trim(stripped.substr(eq + 1));
    if (key == "n")
      n = static_cast<int>(parse_number(val, key));
    else if (key == "k")
      k = static_cast<int>(parse_number(val, key));
    else if (key == "e")
      e = static_cast<int>(parse_number(val, key));
    else if (key == "gamma")
      gamma = parse_number(val, key);
    else if (key == "theta")
      theta = parse_number(val, key);
    else if (key == "alpha")
      alpha = parse_number(val, key);
    else if (key == "beta")
      beta = parse_number(val, key);
    else if (key == "epoch_time")
      epoch_times = parse_number_list(val, key);
    else if (key == "prob_table")
      prob_table = val;
    else
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": unknown key '" + key + "'");
  }
  if (!n || !k || !e)
    throw ConfigError(path + ": keys n, k, e are required");
  if (epoch_times.empty())
    throw ConfigError(path + ": epoch_time is required (t_1..t_n)");

  MdpModel model(*n, *k, *e, std::move(epoch_times), alpha, beta, gamma,
                 theta);

  if (!prob_table.empty()) {
    std::string resolved = prob_table;
    if (!resolved.empty() && resolved.front() != '/') {
      auto slash = path.find_last_of('/');
      if (slash != std::string::npos)
        resolved = path.substr(0, slash + 1) + resolved;
    }
    apply_prob_table(model, resolved);
  }
  return model;
}

void apply_prob_table(MdpModel& model, const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw ConfigError("cannot open prob table: " + csv_path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "h,j,alpha,beta")
    throw ConfigError(csv_path + ": expected header 'h,j,alpha,beta'");
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (cells.size() != 4)
      throw ConfigError(csv_path + ":" + std::to_string(line_no) +
                        ": expected 4 columns");
    SearchState s{static_cast<int>(parse_number(cells[0], "h")),
                  static_cast<int>(parse_number(cells[1], "j"))};
    model.set_alpha(s, parse_number(cells[2], "alpha"));
    model.set_beta(s, parse_number(cells[3], "beta"));
  }
}

}  // namespace dalc
