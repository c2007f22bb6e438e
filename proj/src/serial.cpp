#include "dalc/serial.hpp"

#include <fstream>

namespace dalc {

namespace {

const Json& require(const Json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end())
    throw DataError(std::string("missing field '") + field + "'");
  return *it;
}

std::vector<double> number_array(const Json& j, const char* field) {
  const Json& a = require(j, field);
  if (!a.is_array())
    throw DataError(std::string("field '") + field + "' must be an array");
  std::vector<double> out;
  out.reserve(a.size());
  for (const auto& v : a) {
    if (!v.is_number())
      throw DataError(std::string("field '") + field +
                      "' must contain numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

Json lstm_config_to_json(const LstmConfig& c) {
  return Json{{"hidden_layers", c.hidden_layers},
              {"epochs", c.epochs},
              {"hidden_units", c.hidden_units},
              {"window_len", c.window_len},
              {"learning_rate", c.learning_rate},
              {"seed", c.seed}};
}

LstmConfig lstm_config_from_json(const Json& j) {
  LstmConfig c;
  c.hidden_layers = require(j, "hidden_layers").get<int>();
  c.epochs = require(j, "epochs").get<int>();
  c.hidden_units = require(j, "hidden_units").get<int>();
  c.window_len = require(j, "window_len").get<int>();
  c.learning_rate = require(j, "learning_rate").get<double>();
  c.seed = require(j, "seed").get<std::uint64_t>();
  return c;
}

Json normalization_to_json(const Normalization& n) {
  return Json{{"min", n.min}, {"scale", n.scale}};
}

Normalization normalization_from_json(const Json& j) {
  Normalization n;
  n.min = require(j, "min").get<double>();
  n.scale = require(j, "scale").get<double>();
  if (!(n.scale > 0.0)) throw DataError("normalization scale must be positive");
  return n;
}

namespace {

constexpr const char* kGateNames[WeightLayout::kGates] = {"input", "forget",
                                                          "cell", "output"};

}  // namespace

Json trained_model_to_json(const TrainedModel& m) {
  const WeightLayout lay = m.layout();
  Json layers = Json::array();
  for (int l = 0; l < lay.layers(); ++l) {
    Json layer;
    for (int g = 0; g < WeightLayout::kGates; ++g) {
      const int in = lay.input_size(l);
      auto slice = [&](int offset, int len) {
        return std::vector<double>(m.weights.begin() + offset,
                                   m.weights.begin() + offset + len);
      };
      layer[std::string("wx_") + kGateNames[g]] =
          slice(lay.wx(l, g), lay.units() * in);
      layer[std::string("wh_") + kGateNames[g]] =
          slice(lay.wh(l, g), lay.units() * lay.units());
      layer[std::string("b_") + kGateNames[g]] =
          slice(lay.bias(l, g), lay.units());
    }
    layers.push_back(std::move(layer));
  }
  Json readout{{"w", std::vector<double>(m.weights.begin() + lay.readout_w(),
                                         m.weights.begin() + lay.readout_w() +
                                             lay.units())},
               {"b", m.weights[lay.readout_b()]}};
  return Json{{"config", lstm_config_to_json(m.config)},
              {"normalization", normalization_to_json(m.normalization)},
              {"layers", std::move(layers)},
              {"readout", std::move(readout)}};
}

TrainedModel trained_model_from_json(const Json& j) {
  TrainedModel m;
  m.config = lstm_config_from_json(require(j, "config"));
  m.normalization = normalization_from_json(require(j, "normalization"));
  const WeightLayout lay = m.layout();
  m.weights.assign(lay.total(), 0.0);

  const Json& layers = require(j, "layers");
  if (static_cast<int>(layers.size()) != lay.layers())
    throw DataError("model has the wrong number of layers");
  for (int l = 0; l < lay.layers(); ++l) {
    const Json& layer = layers[l];
    for (int g = 0; g < WeightLayout::kGates; ++g) {
      const int in = lay.input_size(l);
      auto put = [&](const std::string& field, int offset, int len) {
        auto vals = number_array(layer, field.c_str());
        if (static_cast<int>(vals.size()) != len)
          throw DataError("weight slice '" + field + "' has the wrong length");
        std::copy(vals.begin(), vals.end(), m.weights.begin() + offset);
      };
      put(std::string("wx_") + kGateNames[g], lay.wx(l, g), lay.units() * in);
      put(std::string("wh_") + kGateNames[g], lay.wh(l, g),
          lay.units() * lay.units());
      put(std::string("b_") + kGateNames[g], lay.bias(l, g), lay.units());
    }
  }
  const Json& readout = require(j, "readout");
  auto w = number_array(readout, "w");
  if (static_cast<int>(w.size()) != lay.units())
    throw DataError("readout has the wrong length");
  std::copy(w.begin(), w.end(), m.weights.begin() + lay.readout_w());
  m.weights[lay.readout_b()] = require(readout, "b").get<double>();
  return m;
}

namespace {

Json window_to_json(const Window& w) {
  return Json{{"x", w.input}, {"y", w.target}};
}

Window window_from_json(const Json& j) {
  Window w;
  w.input = number_array(j, "x");
  w.target = require(j, "y").get<double>();
  return w;
}

}  // namespace

Json dataset_to_json(const DpcDataset& d) {
  Json train = Json::array(), test = Json::array();
  for (const auto& w : d.train_windows) train.push_back(window_to_json(w));
  for (const auto& w : d.test_windows) test.push_back(window_to_json(w));
  return Json{{"dpc",
               Json{{"detector_id", d.dpc.detector_id},
                    {"period", to_string(d.dpc.period)}}},
              {"window_len", d.window_len},
              {"normalization", normalization_to_json(d.normalization)},
              {"train", std::move(train)},
              {"test", std::move(test)},
              {"raw_test_targets", d.raw_test_targets}};
}

DpcDataset dataset_from_json(const Json& j) {
  DpcDataset d;
  const Json& dpc = require(j, "dpc");
  d.dpc.detector_id = require(dpc, "detector_id").get<std::string>();
  d.dpc.period = period_from_string(require(dpc, "period").get<std::string>());
  d.window_len = require(j, "window_len").get<int>();
  d.normalization = normalization_from_json(require(j, "normalization"));
  for (const auto& w : require(j, "train"))
    d.train_windows.push_back(window_from_json(w));
  for (const auto& w : require(j, "test"))
    d.test_windows.push_back(window_from_json(w));
  d.raw_test_targets = number_array(j, "raw_test_targets");
  if (d.raw_test_targets.size() != d.test_windows.size())
    throw DataError("raw_test_targets length does not match test windows");
  for (const auto& w : d.train_windows)
    if (static_cast<int>(w.input.size()) != d.window_len)
      throw DataError("training window length does not match window_len");
  for (const auto& w : d.test_windows)
    if (static_cast<int>(w.input.size()) != d.window_len)
      throw DataError("testing window length does not match window_len");
  return d;
}

Json mdp_model_to_json(const MdpModel& m) {
  std::vector<double> alpha, beta, times;
  for (int i = 0; i < m.state_count(); ++i) {
    alpha.push_back(m.alpha(m.state_at(i)));
    beta.push_back(m.beta(m.state_at(i)));
  }
  for (int h = 1; h <= m.max_layers(); ++h) times.push_back(m.epoch_time(h));
  return Json{{"n", m.max_layers()},     {"k", m.max_epochs()},
              {"e", m.epoch_increment()}, {"gamma", m.gamma()},
              {"theta", m.theta()},       {"alpha", std::move(alpha)},
              {"beta", std::move(beta)},  {"epoch_time", std::move(times)}};
}

MdpModel mdp_model_from_json(const Json& j) {
  const int n = require(j, "n").get<int>();
  const int k = require(j, "k").get<int>();
  const int e = require(j, "e").get<int>();
  MdpModel m(n, k, e, number_array(j, "epoch_time"), 0.5, 0.5,
             require(j, "gamma").get<double>(),
             require(j, "theta").get<double>());
  const auto alpha = number_array(j, "alpha");
  const auto beta = number_array(j, "beta");
  if (static_cast<int>(alpha.size()) != m.state_count() ||
      static_cast<int>(beta.size()) != m.state_count())
    throw DataError("alpha/beta arrays must cover every state");
  for (int i = 0; i < m.state_count(); ++i) {
    m.set_alpha(m.state_at(i), alpha[i]);
    m.set_beta(m.state_at(i), beta[i]);
  }
  return m;
}

Json policy_to_json(const PolicyTable& p) {
  Json actions = Json::array();
  for (const auto& a : p.action) {
    if (a)
      actions.push_back(to_string(*a));
    else
      actions.push_back(nullptr);
  }
  return Json{{"max_layers", p.max_layers},
              {"epoch_steps", p.epoch_steps},
              {"iterations", p.iterations},
              {"value", p.value},
              {"action", std::move(actions)}};
}

PolicyTable policy_from_json(const Json& j) {
  PolicyTable p;
  p.max_layers = require(j, "max_layers").get<int>();
  p.epoch_steps = require(j, "epoch_steps").get<int>();
  p.iterations = require(j, "iterations").get<int>();
  p.value = number_array(j, "value");
  for (const auto& a : require(j, "action")) {
    if (a.is_null())
      p.action.emplace_back(std::nullopt);
    else
      p.action.emplace_back(action_from_string(a.get<std::string>()));
  }
  if (p.value.size() != p.action.size() ||
      static_cast<int>(p.value.size()) != p.max_layers * p.epoch_steps)
    throw DataError("policy arrays do not match the declared geometry");
  return p;
}

namespace {

Json step_to_json(const AlcStep& s) {
  Json j{{"trained_layers", s.trained_layers},
         {"trained_epochs", s.trained_epochs},
         {"aare", s.aare},
         {"accepted", s.accepted},
         {"e_now_after", s.e_now_after},
         {"train_seconds", s.train_seconds}};
  if (s.state_before)
    j["state_before"] =
        Json{{"h", s.state_before->layers}, {"j", s.state_before->epoch_multiple}};
  else
    j["state_before"] = nullptr;
  j["suggested"] = s.suggested ? Json(to_string(*s.suggested)) : Json(nullptr);
  j["taken"] = s.taken ? Json(to_string(*s.taken)) : Json(nullptr);
  return j;
}

AlcStep step_from_json(const Json& j) {
  AlcStep s;
  const Json& sb = require(j, "state_before");
  if (!sb.is_null())
    s.state_before = SearchState{require(sb, "h").get<int>(),
                                 require(sb, "j").get<int>()};
  const Json& sug = require(j, "suggested");
  if (!sug.is_null()) s.suggested = action_from_string(sug.get<std::string>());
  const Json& tk = require(j, "taken");
  if (!tk.is_null()) s.taken = action_from_string(tk.get<std::string>());
  s.trained_layers = require(j, "trained_layers").get<int>();
  s.trained_epochs = require(j, "trained_epochs").get<int>();
  s.aare = require(j, "aare").get<double>();
  s.accepted = require(j, "accepted").get<bool>();
  s.e_now_after = require(j, "e_now_after").get<double>();
  s.train_seconds = require(j, "train_seconds").get<double>();
  return s;
}

}  // namespace

Json trace_to_json(const AlcTrace& t) {
  Json steps = Json::array();
  for (const auto& s : t.steps) steps.push_back(step_to_json(s));
  return Json{{"steps", std::move(steps)},
              {"reason", to_string(t.reason)},
              {"branch", to_string(t.branch)},
              {"final_state",
               Json{{"h", t.final_state.layers},
                    {"j", t.final_state.epoch_multiple}}}};
}

AlcTrace trace_from_json(const Json& j) {
  AlcTrace t;
  for (const auto& s : require(j, "steps")) t.steps.push_back(step_from_json(s));
  t.reason =
      termination_reason_from_string(require(j, "reason").get<std::string>());
  t.branch =
      terminal_branch_from_string(require(j, "branch").get<std::string>());
  const Json& fs = require(j, "final_state");
  t.final_state =
      SearchState{require(fs, "h").get<int>(), require(fs, "j").get<int>()};
  return t;
}

Json customized_model_to_json(const CustomizedModel& m) {
  return Json{
      {"outcome", Json{{"config", lstm_config_to_json(m.outcome.model.config)},
                       {"aare", m.outcome.aare},
                       {"train_seconds", m.outcome.train_seconds},
                       {"epoch_seconds", m.outcome.epoch_seconds}}},
      {"trace", trace_to_json(m.trace)},
      {"total_search_seconds", m.total_search_seconds}};
}

void save_json(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << j.dump(2) << '\n';
}

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace dalc
