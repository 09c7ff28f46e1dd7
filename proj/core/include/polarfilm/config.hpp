#pragma once

#include <string>

#include <cstdint>
#include <vector>

#include "polarfilm/dataset.hpp"
#include "polarfilm/pipeline.hpp"
#include "polarfilm/train.hpp"

namespace polarfilm {

constexpr int kConfigVersion = 1;

/// Configs are JSON objects carrying "format_version". Unknown fields, wrong
/// types and out-of-range values raise ParameterError naming the field and
/// its line.
DatasetConfig parse_dataset_config(const std::string& text);
std::string dataset_config_json(const DatasetConfig& cfg);

struct EvalSettings {
  int k = 10;
  std::vector<std::uint64_t> seeds = {0};
  std::vector<int> folds;
};

struct RunConfig {
  PipelineSpec spec;
  TrainConfig train;
  EvalSettings eval;
};

RunConfig parse_run_config(const std::string& text);
std::string run_config_json(const RunConfig& cfg);

}  // namespace polarfilm
