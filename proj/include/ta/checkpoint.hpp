#pragma once

#include <functional>
#include <string>

#include "ta/config.hpp"
#include "ta/param.hpp"

namespace ta {

// Checkpoint container: a text config describing the model, a manifest of
// (name, shape, offset) in deterministic visit order, then the raw TNSR
// blobs. Loading reconstructs by name and fails on the first tensor whose
// name or shape does not match the constructed model.

using ModuleVisit = std::function<void(const ParamVisitor&)>;

void save_checkpoint(const std::string& path, const KvConfig& model_config,
                     const ModuleVisit& visit);

KvConfig load_checkpoint_config(const std::string& path);

void load_checkpoint_params(const std::string& path, const ModuleVisit& visit);

}  // namespace ta
