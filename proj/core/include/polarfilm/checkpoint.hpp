#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "polarfilm/pipeline.hpp"
#include "polarfilm/tensor.hpp"

namespace polarfilm {

struct NamedTensor {
  std::string name;
  Tensor<float> value;

  bool operator==(const NamedTensor&) const = default;
};

/// Adam moments, one pair per parameter in checkpoint order.
struct OptimizerState {
  std::uint64_t step = 0;
  std::vector<Tensor<float>> m;
  std::vector<Tensor<float>> v;

  bool operator==(const OptimizerState&) const = default;
};

/// Everything needed to resume training or run inference.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  PipelineSpec spec;
  std::uint64_t iteration = 0;
  std::uint64_t seed = 0;
  std::vector<NamedTensor> parameters;
  OptimizerState optimizer;

  bool operator==(const Checkpoint&) const = default;
};

Checkpoint snapshot(const Pipeline<float>& pipeline, std::uint64_t iteration, std::uint64_t seed,
                    OptimizerState optimizer = {});
/// Builds a pipeline from the checkpoint's spec and copies every parameter.
Pipeline<float> restore(const Checkpoint& ckpt);
/// Copies parameters into an existing pipeline; names and shapes must agree.
void load_parameters(const Checkpoint& ckpt, Pipeline<float>& pipeline);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws IoError when missing, FormatError on a bad or foreign-version file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace polarfilm
