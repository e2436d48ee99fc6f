#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gappy/gradcheck.hpp"
#include "gappy/models.hpp"
#include "gappy/training.hpp"

namespace gappy::cli {

enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kConfigError = 2,
  kCheckpointError = 3,
  kDataError = 4,
};

// Everything `train` needs, merged from the config file and flag overrides.
struct RunConfig {
  std::string train_path;
  std::string dev_path;
  std::string checkpoint;
  std::string log_path;  // defaults to <checkpoint>.log.csv
  std::size_t min_count = 1;
  std::optional<std::uint64_t> seed;
  ModelConfig model;
  TrainConfig train;
};

// Nested objects become dotted keys: {"model": {"kind": "x"}} -> {"model.kind": "x"}.
nlohmann::json flatten(const nlohmann::json& doc);

// Flag value text -> JSON scalar: numbers and booleans are parsed, anything
// else stays a string.
nlohmann::json parse_flag_value(const std::string& text);

// Applies flat keys to a RunConfig. Unknown keys and badly typed values are
// collected and reported together as one ConfigError.
RunConfig run_config_from_json(const nlohmann::json& flat);

// Flag or config seed first, then GAPPY_SEED, then 1.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& configured);

// Checks paths and hyper-parameters; throws ConfigError listing every problem.
void validate_run_config(const RunConfig& cfg);

// Gradient-check fixtures on small random shapes. `layer` is one of
// gcn, attention, highway, bilstm, cnn or full (the whole H-combined model).
// `corrupt` doubles the gradient flowing out of the loss.
GradCheckReport gradcheck_scenario(const std::string& layer, std::uint64_t seed, bool corrupt = false);
const std::vector<std::string>& gradcheck_layers();

// Entry point shared by the executable and the tests. `args` excludes the
// program name. Machine-readable output goes to `out`, logs to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gappy::cli
