#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <vector>

#include "polarfilm/checkpoint.hpp"
#include "polarfilm/field.hpp"
#include "polarfilm/pipeline.hpp"
#include "polarfilm/polar.hpp"

namespace polarfilm {

struct TrainConfig {
  double base_lr = 5e-5;
  double decay = 0.5;
  std::uint64_t decay_interval = 20000;
  int batch = 2;
  std::uint64_t max_iterations = 5000;
  std::uint64_t seed = 0;
  int crop = 32;  // square training crop; 0 trains on whole images
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t checkpoint_interval = 0;  // 0 disables periodic checkpoints

  void validate() const;
};

/// base * decay^floor(iter / interval)
double lr_at(std::uint64_t iter, const TrainConfig& cfg);

struct TrainSample {
  PolarStack stack;
  Field gt;
};

/// Adam over a fixed parameter list; moments are kept in parameter order.
class Adam {
 public:
  Adam(std::vector<Parameter<float>*> params, double beta1, double beta2, double eps);

  void step(double lr);
  OptimizerState state() const;
  void load_state(const OptimizerState& state);

 private:
  std::vector<Parameter<float>*> params_;
  double beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  std::vector<Tensor<float>> m_, v_;
};

struct TrainHooks {
  std::ostream* log = nullptr;  // one JSON object per iteration
  std::function<void(const Checkpoint&)> on_checkpoint;
  std::filesystem::path dump_dir;  // where an offending batch is written on a non-finite loss
  const Checkpoint* resume = nullptr;
};

struct TrainResult {
  Pipeline<float> pipeline;
  OptimizerState optimizer;
  std::uint64_t iterations = 0;
  std::vector<double> losses;

  Checkpoint checkpoint(std::uint64_t seed) const { return snapshot(pipeline, iterations, seed, optimizer); }
};

/// Joint end-to-end training with an L1 loss on the reconstruction.
/// Deterministic in (cfg, spec, samples).
TrainResult train(const TrainConfig& cfg, const PipelineSpec& spec, const std::vector<TrainSample>& samples,
                  const TrainHooks& hooks = {});

}  // namespace polarfilm
