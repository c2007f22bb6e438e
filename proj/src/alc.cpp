#include "dalc/alc.hpp"

#include <cstdio>

namespace dalc {

AlcParams::AlcParams(double delta_, MdpModel model_, PolicyTable policy_,
                     std::uint64_t base_seed_, LstmConfig defaults)
    : delta(delta_),
      model(std::move(model_)),
      policy(std::move(policy_)),
      base_seed(base_seed_),
      trainer_defaults(defaults) {
  if (!(delta > 0.0 && delta < 1.0))
    throw ConfigError("delta must be in (0, 1)");
  if (!policy.covers(model))
    throw ConfigError("policy table does not cover the model's state space");
}

const char* to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::SatisfiedDelta:
      return "satisfied_delta";
    case TerminationReason::LocalOptimum:
      return "local_optimum";
    case TerminationReason::BudgetExhausted:
      return "budget_exhausted";
  }
  return "?";
}

const char* to_string(TerminalBranch b) {
  switch (b) {
    case TerminalBranch::InitialSatisfied:
      return "initial_satisfied";
    case TerminalBranch::PolicyEpochsSatisfied:
      return "policy_epochs_satisfied";
    case TerminalBranch::FallbackLayerSatisfied:
      return "fallback_layer_satisfied";
    case TerminalBranch::LocalOptimumEpochsFirst:
      return "local_optimum_epochs_first";
    case TerminalBranch::PolicyLayerSatisfied:
      return "policy_layer_satisfied";
    case TerminalBranch::FallbackEpochsSatisfied:
      return "fallback_epochs_satisfied";
    case TerminalBranch::LocalOptimumLayerFirst:
      return "local_optimum_layer_first";
    case TerminalBranch::BudgetExhausted:
      return "budget_exhausted";
  }
  return "?";
}

TerminationReason termination_reason_from_string(std::string_view name) {
  if (name == "satisfied_delta") return TerminationReason::SatisfiedDelta;
  if (name == "local_optimum") return TerminationReason::LocalOptimum;
  if (name == "budget_exhausted") return TerminationReason::BudgetExhausted;
  throw ConfigError("unknown termination reason: " + std::string(name));
}

TerminalBranch terminal_branch_from_string(std::string_view name) {
  for (TerminalBranch b :
       {TerminalBranch::InitialSatisfied, TerminalBranch::PolicyEpochsSatisfied,
        TerminalBranch::FallbackLayerSatisfied,
        TerminalBranch::LocalOptimumEpochsFirst,
        TerminalBranch::PolicyLayerSatisfied,
        TerminalBranch::FallbackEpochsSatisfied,
        TerminalBranch::LocalOptimumLayerFirst, TerminalBranch::BudgetExhausted})
    if (name == to_string(b)) return b;
  throw ConfigError("unknown terminal branch: " + std::string(name));
}

namespace {

ActionKind other_action(ActionKind a) {
  return a == ActionKind::IncreaseEpochs ? ActionKind::AddLayer
                                         : ActionKind::IncreaseEpochs;
}

struct ConfigFor {
  int layers;
  int epochs;
};

ConfigFor config_after(const SearchState& s, ActionKind a, int increment) {
  const SearchState nxt = success_state(s, a);
  return ConfigFor{nxt.layers, nxt.epoch_multiple * increment};
}

}  // namespace

CustomizedModel run_alc(const DpcDataset& dataset, const AlcParams& params,
                        const Trainer& trainer) {
  const MdpModel& model = params.model;
  const int e = model.epoch_increment();

  AlcTrace trace;
  double total_seconds = 0.0;

  auto make_config = [&](int layers, int epochs) {
    LstmConfig cfg = params.trainer_defaults;
    cfg.hidden_layers = layers;
    cfg.epochs = epochs;
    cfg.window_len = dataset.window_len;
    cfg.seed = derive_config_seed(params.base_seed, layers, epochs);
    return cfg;
  };

  auto call_trainer = [&](const LstmConfig& cfg) -> TrainingOutcome {
    try {
      return trainer(cfg, dataset);
    } catch (const std::exception& ex) {
      throw TrainerFailure("trainer failed for configuration (" +
                               std::to_string(cfg.hidden_layers) + " layers, " +
                               std::to_string(cfg.epochs) +
                               " epochs): " + ex.what(),
                           trace);
    }
  };

  // The search always begins by training the smallest configuration.
  TrainingOutcome best = call_trainer(make_config(1, e));
  double e_now = best.aare;
  total_seconds += best.train_seconds;
  trace.steps.push_back(AlcStep{std::nullopt, std::nullopt, std::nullopt, 1, e,
                                best.aare, true, e_now, best.train_seconds});

  SearchState cur{1, 1};

  auto finish = [&](TerminationReason reason, TerminalBranch branch) {
    trace.reason = reason;
    trace.branch = branch;
    trace.final_state = cur;
    CustomizedModel out;
    out.outcome = std::move(best);
    out.trace = std::move(trace);
    out.total_search_seconds = total_seconds;
    return out;
  };

  if (e_now <= params.delta)
    return finish(TerminationReason::SatisfiedDelta,
                  TerminalBranch::InitialSatisfied);

  while (true) {
    if (model.is_terminal(cur))
      return finish(TerminationReason::BudgetExhausted,
                    TerminalBranch::BudgetExhausted);

    const std::optional<ActionKind> stored =
        params.policy.action[params.policy.state_index(cur)];

    std::optional<ActionKind> first;
    if (stored && model.action_available(cur, *stored))
      first = *stored;
    else if (stored && model.action_available(cur, other_action(*stored)))
      first = other_action(*stored);
    if (!first)
      return finish(TerminationReason::BudgetExhausted,
                    TerminalBranch::BudgetExhausted);

    auto attempt = [&](ActionKind action) {
      const ConfigFor cf = config_after(cur, action, e);
      TrainingOutcome out = call_trainer(make_config(cf.layers, cf.epochs));
      total_seconds += out.train_seconds;
      const bool improved = out.aare < e_now;
      trace.steps.push_back(AlcStep{cur, stored, action, cf.layers, cf.epochs,
                                    out.aare, improved,
                                    improved ? out.aare : e_now,
                                    out.train_seconds});
      return out;
    };

    // First attempt: the policy's suggestion whenever it is available.
    TrainingOutcome first_out = attempt(*first);
    const bool first_improved = first_out.aare < e_now;

    if (first_improved) {
      cur = success_state(cur, *first);
      e_now = first_out.aare;
      best = std::move(first_out);
      if (e_now <= params.delta)
        return finish(TerminationReason::SatisfiedDelta,
                      *first == ActionKind::IncreaseEpochs
                          ? TerminalBranch::PolicyEpochsSatisfied
                          : TerminalBranch::PolicyLayerSatisfied);
      continue;
    }

    // The suggestion did not help; try the other action once.
    const ActionKind second = other_action(*first);
    if (!model.action_available(cur, second))
      return finish(TerminationReason::LocalOptimum,
                    *first == ActionKind::IncreaseEpochs
                        ? TerminalBranch::LocalOptimumEpochsFirst
                        : TerminalBranch::LocalOptimumLayerFirst);

    TrainingOutcome second_out = attempt(second);
    const bool second_improved = second_out.aare < e_now;
    if (second_improved) {
      cur = success_state(cur, second);
      e_now = second_out.aare;
      best = std::move(second_out);
      if (e_now <= params.delta)
        return finish(TerminationReason::SatisfiedDelta,
                      second == ActionKind::IncreaseEpochs
                          ? TerminalBranch::FallbackEpochsSatisfied
                          : TerminalBranch::FallbackLayerSatisfied);
      continue;
    }

    // Neither action improves: the current model is a local optimum.
    return finish(TerminationReason::LocalOptimum,
                  *first == ActionKind::IncreaseEpochs
                      ? TerminalBranch::LocalOptimumEpochsFirst
                      : TerminalBranch::LocalOptimumLayerFirst);
  }
}

std::string canonical_trace_string(const AlcTrace& trace) {
  std::string out;
  char buf[64];
  auto add_num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
  };
  for (const AlcStep& s : trace.steps) {
    if (s.state_before) {
      out += std::to_string(s.state_before->layers);
      out += ',';
      out += std::to_string(s.state_before->epoch_multiple);
    } else {
      out += "start";
    }
    out += '|';
    out += s.suggested ? to_string(*s.suggested) : "-";
    out += '|';
    out += s.taken ? to_string(*s.taken) : "-";
    out += '|';
    out += std::to_string(s.trained_layers);
    out += ',';
    out += std::to_string(s.trained_epochs);
    out += '|';
    add_num(s.aare);
    out += '|';
    out += s.accepted ? '1' : '0';
    out += '|';
    add_num(s.e_now_after);
    out += ';';
  }
  out += to_string(trace.reason);
  out += ';';
  out += to_string(trace.branch);
  out += ";final=";
  out += std::to_string(trace.final_state.layers);
  out += ',';
  out += std::to_string(trace.final_state.epoch_multiple);
  return out;
}

}  // namespace dalc
