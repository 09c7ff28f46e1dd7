#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "polarfilm/pipeline.hpp"
#include "polarfilm/train.hpp"

namespace polarfilm {

struct FoldPlan {
  int k = 10;
  std::uint64_t seed = 0;
  std::vector<int> assignments;  // sample index -> fold

  std::vector<std::size_t> test_indices(int fold) const;
  std::vector<std::size_t> train_indices(int fold) const;
  std::vector<std::size_t> fold_sizes() const;
};

/// Seeded shuffle dealt round-robin into k folds.
FoldPlan kfold_split(std::size_t sample_count, int k = 10, std::uint64_t seed = 0);

double mean_of(const std::vector<double>& xs);
/// Population variance (divides by n).
double variance_of(const std::vector<double>& xs);

struct FoldScore {
  std::uint64_t seed = 0;
  int fold = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct Column {
  std::string name;  // pipeline mode or baseline name
  std::vector<FoldScore> folds;
  double psnr_mean = 0.0, psnr_variance = 0.0;
  double ssim_mean = 0.0, ssim_variance = 0.0;

  void summarize();
};

/// Per-fold (Full - ablation) differences under identical seeds and folds.
struct PairedDelta {
  std::string ablation;
  std::vector<FoldScore> deltas;
  double psnr_mean = 0.0;
  double ssim_mean = 0.0;
};

/// Published figures kept for comparison only; nothing here is reproduced.
struct ExternalReference {
  std::string note;
  std::vector<double> psnr_folds, ssim_folds;
  double psnr_mean = 0.0, psnr_variance = 0.0;
  double ssim_mean = 0.0, ssim_variance = 0.0;
};

ExternalReference published_reference();

struct Report {
  static constexpr int kVersion = 1;

  std::string fingerprint;
  int k = 10;
  std::vector<std::uint64_t> seeds;
  std::vector<int> folds;
  std::vector<Column> columns;
  std::vector<PairedDelta> deltas;
  ExternalReference reference = published_reference();

  const Column& column(const std::string& name) const;
  std::string to_json() const;
  std::string to_table() const;
};

Report report_from_json(const std::string& text);
/// Throws DataError if any stored mean, variance or delta disagrees with its per-fold values.
void verify_report(const Report& report);

struct EvalSample {
  PolarStack stack;
  Field gt;
};

struct Scores {
  double psnr = 0.0;
  double ssim = 0.0;
};

/// Averages over the given samples.
Scores evaluate_pipeline(const Pipeline<float>& pipeline, const std::vector<EvalSample>& samples,
                         const std::vector<std::size_t>& indices);
/// s0 clamped to [0, 1]: the unfiltered intensity.
Scores evaluate_intensity_baseline(const std::vector<EvalSample>& samples, const std::vector<std::size_t>& indices);
/// 2 * analytic prior, clamped: the polarizer-only estimate at matched scale.
Scores evaluate_prior_baseline(const std::vector<EvalSample>& samples, const std::vector<std::size_t>& indices);

struct CrossvalOptions {
  int k = 10;
  std::vector<std::uint64_t> seeds = {0};
  std::vector<int> folds;  // empty runs all k
  bool baselines = true;
  std::function<void(const std::string&)> progress;
  /// Called after each fold is trained, e.g. to export reconstructions.
  std::function<void(std::uint64_t seed, int fold, const Pipeline<float>&, const std::vector<std::size_t>& test)>
      on_trained;
};

/// Trains per (seed, fold) and scores the held-out fold.
Report run_crossval(const std::vector<EvalSample>& samples, const TrainConfig& cfg, const PipelineSpec& spec,
                    const CrossvalOptions& options);

/// run_crossval for each mode with matched seeds and folds, plus paired deltas against Full.
Report run_ablations(const std::vector<EvalSample>& samples, const TrainConfig& cfg, const PipelineSpec& base,
                     const CrossvalOptions& options,
                     const std::vector<PipelineMode>& modes = {PipelineMode::Full, PipelineMode::NoPrior,
                                                               PipelineMode::NoAopDop, PipelineMode::NoPolar});

}  // namespace polarfilm
