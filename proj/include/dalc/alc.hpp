#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dalc/data.hpp"
#include "dalc/errors.hpp"
#include "dalc/lstm.hpp"
#include "dalc/mdp.hpp"

namespace dalc {

// Anything that can train a configuration on a dataset. Production binding
// is dalc::train; tests script this to force specific search paths.
// Must be deterministic for fixed inputs and seed.
using Trainer =
    std::function<TrainingOutcome(const LstmConfig&, const DpcDataset&)>;

struct AlcParams {
  double delta = 0.05;  // accuracy satisfaction threshold
  MdpModel model;
  PolicyTable policy;
  std::uint64_t base_seed = 0;
  // Template for everything the search does not vary; hidden_layers,
  // epochs and seed are overwritten per training call.
  LstmConfig trainer_defaults;

  AlcParams(double delta_, MdpModel model_, PolicyTable policy_,
            std::uint64_t base_seed_, LstmConfig defaults = {});
};

enum class TerminationReason { SatisfiedDelta, LocalOptimum, BudgetExhausted };

// Which exit the search took. The two local-optimum exits are distinguished
// by which action was suggested first.
enum class TerminalBranch {
  InitialSatisfied,         // very first configuration already within delta
  PolicyEpochsSatisfied,    // suggested epoch increase improved and satisfied
  FallbackLayerSatisfied,   // epoch increase failed; layer add satisfied
  LocalOptimumEpochsFirst,  // epochs then layer, neither improved
  PolicyLayerSatisfied,     // suggested layer add improved and satisfied
  FallbackEpochsSatisfied,  // layer add failed; epoch increase satisfied
  LocalOptimumLayerFirst,   // layer then epochs, neither improved
  BudgetExhausted,          // no state left to move to
};

const char* to_string(TerminationReason r);
const char* to_string(TerminalBranch b);
TerminationReason termination_reason_from_string(std::string_view name);
TerminalBranch terminal_branch_from_string(std::string_view name);

// One training invocation. The first call of a run has no originating state
// or action (state_before is empty: the search starts by training the
// smallest configuration).
struct AlcStep {
  std::optional<SearchState> state_before;
  std::optional<ActionKind> suggested;
  std::optional<ActionKind> taken;
  int trained_layers = 0;
  int trained_epochs = 0;
  double aare = 0.0;
  bool accepted = false;
  double e_now_after = 0.0;
  double train_seconds = 0.0;
};

struct AlcTrace {
  std::vector<AlcStep> steps;
  TerminationReason reason = TerminationReason::SatisfiedDelta;
  TerminalBranch branch = TerminalBranch::InitialSatisfied;
  SearchState final_state;  // configuration of the output model
};

struct CustomizedModel {
  TrainingOutcome outcome;
  AlcTrace trace;
  double total_search_seconds = 0.0;  // sum over all training calls
};

// Thrown when the trainer itself fails; carries what happened so far.
class TrainerFailure : public Error {
 public:
  TrainerFailure(const std::string& what, AlcTrace partial)
      : Error(what), partial_trace(std::move(partial)) {}
  AlcTrace partial_trace;
};

// Runs the customization search: train the smallest configuration, then walk
// the state space taking the policy-suggested action first and the other
// action as a one-shot fallback, accepting only strict accuracy
// improvements, until the accuracy threshold is met, neither action helps,
// or no state is left. The output is always the best configuration observed.
CustomizedModel run_alc(const DpcDataset& dataset, const AlcParams& params,
                        const Trainer& trainer);

// Canonical text form of the deterministic trace fields (timings excluded);
// two runs of the same job must agree on it byte for byte.
std::string canonical_trace_string(const AlcTrace& trace);

}  // namespace dalc
