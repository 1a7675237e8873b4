#pragma once

#include <json.hpp>

#include "setfunc/aggregators.hpp"
#include "setfunc/mlp.hpp"
#include "setfunc/set_model.hpp"

namespace setfunc {

using json = nlohmann::json;

json to_json(const MonotoneMapId& g);
MonotoneMapId monotone_map_from_json(const json& j);

/// {"kind": "...", "p": ..., "learnable": ...} plus kind-specific fields.
json to_json(const AggregatorSpec& spec);
AggregatorSpec aggregator_from_json(const json& j);

json to_json(const MlpSpec& spec);
MlpSpec mlp_spec_from_json(const json& j);

/// Single-document checkpoint: specs + flat parameter arrays + p.
/// Round-trips every parameter bit-exactly.
json model_to_json(const SetModel& model);
SetModel model_from_json(const json& j);

}  // namespace setfunc
