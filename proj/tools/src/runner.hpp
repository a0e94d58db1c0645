#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gossipfield/network.hpp"

namespace gossipfield::tools {

inline constexpr const char* kVersion = "0.1.0";

struct TaskSpec {
  std::string type;
  nlohmann::json params = nlohmann::json::object();
};

/// Parsed experiment file. The network comes from exactly one of
/// {"inline": {...}}, {"file": "path"} or {"recipe": {...}}.
struct ExperimentSpec {
  nlohmann::json network;
  std::optional<double> trust;
  std::optional<nlohmann::json> beliefs;
  std::vector<TaskSpec> tasks;
  std::optional<std::uint64_t> seed;
  std::filesystem::path base_dir;
};

/// Throws kCliInvalidSpec on schema errors: no tasks, unknown task types,
/// missing seed for a stochastic task or recipe, missing referenced files.
ExperimentSpec parse_experiment(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Network described by the spec, with trust and belief overrides applied.
/// `recipe_info` receives generator metadata when the source is a recipe.
SocialNetwork resolve_network(const ExperimentSpec& spec, nlohmann::json* recipe_info = nullptr,
                              std::string* edge_list = nullptr);

struct RunResult {
  int exit_code = 0;
  nlohmann::json manifest;
};

/// Executes the tasks in order and writes one output per task plus
/// manifest.json into `out_dir`. The manifest is written on failure too,
/// with an error record {code, message, task}.
RunResult run_experiment(const std::filesystem::path& spec_path, const std::filesystem::path& out_dir,
                         std::ostream* log = nullptr);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

}  // namespace gossipfield::tools
