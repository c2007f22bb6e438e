#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dalc/errors.hpp"

namespace dalc {

// The two moves available while searching the configuration space:
// retrain with one more epoch block, or retrain with one more hidden layer.
enum class ActionKind { IncreaseEpochs, AddLayer };

const char* to_string(ActionKind kind);
ActionKind action_from_string(std::string_view name);

// One node of the search graph: the model trained with `layers` hidden
// layers for `epoch_multiple` * e epochs.
struct SearchState {
  int layers = 1;          // h, in 1..n
  int epoch_multiple = 1;  // j, in 1..k/e

  friend bool operator==(const SearchState&, const SearchState&) = default;
};

// Probabilities below this floor are clamped up so that every action
// eventually leaves its state and the undiscounted fixed point stays finite.
inline constexpr double kProbFloor = 1e-6;

// All parameters of the configuration-search MDP in one place.
//
// Geometry: up to n hidden layers, up to k total epochs in increments of e
// (k must be a positive multiple of e). alpha(s) is the probability that
// increasing the epoch count improves accuracy in state s, beta(s) the same
// for adding a layer; both default to an uninformative 0.5 and may be
// overridden per state. epoch_time(h) is the measured per-epoch training
// time with h layers, the unit cost everything else is priced in.
class MdpModel {
 public:
  MdpModel(int max_layers, int max_epochs, int epoch_increment,
           std::vector<double> epoch_time_seconds, double alpha = 0.5,
           double beta = 0.5, double gamma = 1.0, double theta = 1.0);

  int max_layers() const { return n_; }
  int max_epochs() const { return k_; }
  int epoch_increment() const { return e_; }
  int epoch_steps() const { return steps_; }  // k / e
  double gamma() const { return gamma_; }
  double theta() const { return theta_; }

  double alpha(const SearchState& s) const;
  double beta(const SearchState& s) const;
  double epoch_time(int layers) const;

  void set_alpha(const SearchState& s, double value);
  void set_beta(const SearchState& s, double value);
  void set_theta(double theta);
  void set_gamma(double gamma);
  // Scales every per-epoch time by a positive factor.
  void scale_epoch_times(double factor);

  int state_count() const { return n_ * steps_; }
  // Index in h-major, j-minor order.
  int state_index(const SearchState& s) const;
  SearchState state_at(int index) const;
  bool is_terminal(const SearchState& s) const;
  bool action_available(const SearchState& s, ActionKind a) const;

 private:
  void check_state(const SearchState& s) const;

  int n_;
  int k_;
  int e_;
  int steps_;
  double gamma_;
  double theta_;
  std::vector<double> alpha_;       // per state, h-major
  std::vector<double> beta_;        // per state, h-major
  std::vector<double> epoch_time_;  // [h - 1] = t_h
};

// One possible consequence of taking an action: either the accuracy
// comparison succeeds and the search advances, or it fails and the state
// stays put. Both outcomes of an action bill the same retraining cost.
struct TransitionOutcome {
  SearchState next;
  double prob = 0.0;
  double cost_seconds = 0.0;
};

// Output of value iteration: the expected remaining search time V per state
// and the time-minimizing action per non-terminal state.
struct PolicyTable {
  int max_layers = 0;
  int epoch_steps = 0;
  std::vector<double> value;                      // indexed h-major
  std::vector<std::optional<ActionKind>> action;  // nullopt for the terminal state
  int iterations = 0;

  int state_index(const SearchState& s) const;
  double value_at(const SearchState& s) const;
  bool covers(const MdpModel& model) const;
};

// All n*(k/e) states in deterministic h-major, j-minor order.
std::vector<SearchState> build_state_space(const MdpModel& model);

// Where the action leads when the accuracy comparison succeeds.
SearchState success_state(const SearchState& s, ActionKind a);

// Retraining cost billed by taking `a` in `s`, in seconds.
double action_cost(const SearchState& s, ActionKind a, const MdpModel& model);

// Exactly two outcomes: the success transition and the self-loop with the
// complementary probability. Throws DomainError if `a` is unavailable at `s`.
std::vector<TransitionOutcome> transitions(const SearchState& s, ActionKind a,
                                           const MdpModel& model);

// Sweeps the minimum-expected-cost backup from V = 0 until the sup-norm
// difference between consecutive sweeps drops below theta, then extracts
// the greedy policy. Ties prefer IncreaseEpochs. Throws ConvergenceError
// (carrying the last residual) past `max_sweeps`.
PolicyTable value_iteration(const MdpModel& model, int max_sweeps = 10000);

// Pure lookup of the stored action. Throws DomainError for terminal states.
ActionKind suggest_action(const PolicyTable& policy, const SearchState& s);

// Loads model parameters from a key = value text file. Recognized keys:
// n, k, e, gamma, theta, alpha, beta, epoch_time (comma-separated t_1..t_n),
// prob_table (path to a CSV with columns h,j,alpha,beta, resolved relative
// to the config file). '#' starts a comment.
MdpModel load_mdp_config(const std::string& path);

// Per-state alpha/beta overrides from CSV with header h,j,alpha,beta.
void apply_prob_table(MdpModel& model, const std::string& csv_path);

}  // namespace dalc
