#pragma once

// JSON forms of the domain types. File loads throw DataError on malformed
// content; the wire protocol wraps these into ProtocolError at its boundary.

#include <json.hpp>

#include "dalc/alc.hpp"
#include "dalc/data.hpp"
#include "dalc/lstm.hpp"
#include "dalc/mdp.hpp"

namespace dalc {

using Json = nlohmann::json;

Json lstm_config_to_json(const LstmConfig& c);
LstmConfig lstm_config_from_json(const Json& j);

Json normalization_to_json(const Normalization& n);
Normalization normalization_from_json(const Json& j);

// Weights are grouped by layer with named per-gate slices.
Json trained_model_to_json(const TrainedModel& m);
TrainedModel trained_model_from_json(const Json& j);

Json dataset_to_json(const DpcDataset& d);
DpcDataset dataset_from_json(const Json& j);

Json mdp_model_to_json(const MdpModel& m);
MdpModel mdp_model_from_json(const Json& j);

Json policy_to_json(const PolicyTable& p);
PolicyTable policy_from_json(const Json& j);

Json trace_to_json(const AlcTrace& t);
AlcTrace trace_from_json(const Json& j);

// One-way report document: the outcome's configuration and scores plus the
// full trace. Weights live in the separate model file.
Json customized_model_to_json(const CustomizedModel& m);

void save_json(const Json& j, const std::string& path);
Json load_json(const std::string& path);

}  // namespace dalc
