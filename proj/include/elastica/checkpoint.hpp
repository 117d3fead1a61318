#pragma once

#include <string>

#include <json.hpp>

#include "elastica/tensor.hpp"

namespace elastica::ad {

inline constexpr int kCheckpointVersion = 1;

// {"version", "header", "modules": {module: {param: {"shape", "data"}}}}.
// A parameter named "a/b/c" is stored under module "a" as "b/c".
nlohmann::json checkpoint_to_json(const ParameterStore& store, const nlohmann::json& header);

// Copies values into an already-shaped store. Every stored parameter must
// exist with the same shape and every store parameter must be present.
void load_checkpoint(const nlohmann::json& checkpoint, ParameterStore& store);

// Rebuilds a store from the file alone (shapes taken from the file).
ParameterStore store_from_checkpoint(const nlohmann::json& checkpoint);

}  // namespace elastica::ad
