#include "gappy/checkpoint.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "gappy/errors.hpp"

namespace gappy {

std::string format_double(double value) { return fmt::format("{:.17g}", value); }

std::string tensors_to_json(const ParameterList& tensors) {
  std::string out = "{";
  bool first = true;
  for (const auto& [name, tensor] : tensors) {
    out += first ? "\n" : ",\n";
    first = false;
    out += "  " + nlohmann::json(name).dump() + ": {\"shape\": [";
    const Shape& shape = tensor.shape();
    for (std::size_t i = 0; i < shape.size(); ++i) out += (i ? ", " : "") + std::to_string(shape[i]);
    out += "], \"values\": [";
    const auto values = tensor.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out += ", ";
      out += format_double(values[i]);
    }
    out += "]}";
  }
  out += "\n}\n";
  return out;
}

TensorMap tensors_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint JSON: ") + e.what());
  }
  return tensors_from_json(doc);
}

TensorMap tensors_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw CheckpointError("checkpoint must be a JSON object");
  TensorMap out;
  for (const auto& [name, entry] : doc.items()) {
    try {
      StoredTensor t;
      t.shape = entry.at("shape").get<Shape>();
      t.values = entry.at("values").get<std::vector<double>>();
      std::size_t n = 1;
      for (auto e : t.shape) n *= e;
      if (t.shape.empty() || n != t.values.size()) {
        throw CheckpointError("tensor '" + name + "' has " + std::to_string(t.values.size()) +
                              " values for shape " + shape_string(t.shape));
      }
      out.emplace(name, std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError("tensor '" + name + "': " + e.what());
    }
  }
  return out;
}

void assign_tensors(const TensorMap& stored, const ParameterList& targets) {
  for (const auto& [name, tensor] : targets) {
    const auto it = stored.find(name);
    if (it == stored.end()) throw CheckpointError("checkpoint lacks tensor '" + name + "'");
    if (it->second.shape != tensor.shape()) {
      throw CheckpointError("tensor '" + name + "' has shape " + shape_string(it->second.shape) + ", model expects " +
                            shape_string(tensor.shape()));
    }
  }
  for (const auto& [name, tensor] : targets) {
    Tensor t = tensor;
    const auto& src = stored.at(name).values;
    std::copy(src.begin(), src.end(), t.values().begin());
  }
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << contents;
    if (!out.flush()) throw std::runtime_error("cannot write " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace gappy
