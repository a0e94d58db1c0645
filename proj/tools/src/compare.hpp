#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>

namespace gossipfield::tools {

struct CompareResult {
  nlohmann::json report;
  bool identical_within_tolerance = true;  ///< report["differences"] is empty
};

/// Pairs the outputs of two runs by kind (in order of appearance) and compares
/// every numeric value. A CSV value differs when its deviation exceeds
/// `tolerance` and, if either side carries a standard-error column "<col>_se",
/// also exceeds three combined standard errors. Throws kCliSchemaMismatch when
/// the runs share no output kind or paired outputs disagree in shape.
CompareResult compare_runs(const std::filesystem::path& dir_a, const std::filesystem::path& dir_b, double tolerance);

}  // namespace gossipfield::tools
