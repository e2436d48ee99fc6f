#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "gappy/tensor.hpp"

namespace gappy {

struct StoredTensor {
  Shape shape;
  std::vector<double> values;
};

using TensorMap = std::map<std::string, StoredTensor>;

// Flat JSON object: name -> {"shape": [...], "values": [...]}, numbers
// printed with 17 significant digits so every double reads back exactly.
std::string tensors_to_json(const ParameterList& tensors);
TensorMap tensors_from_json(const std::string& text);
TensorMap tensors_from_json(const nlohmann::json& doc);

// Copies stored values into the named tensors. Every tensor in `targets`
// must be present with a matching shape; throws CheckpointError otherwise.
void assign_tensors(const TensorMap& stored, const ParameterList& targets);

std::string format_double(double value);

// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace gappy
