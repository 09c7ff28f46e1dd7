#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "polarfilm/crossval.hpp"
#include "polarfilm/film_sim.hpp"
#include "polarfilm/mosaic.hpp"

namespace polarfilm {

/// Recipe for a synthetic dataset: scene parameters shared by all samples,
/// content kinds cycled by sample index, and one base seed.
struct DatasetConfig {
  SceneConfig scene;
  std::vector<ContentKind> kinds = {ContentKind::QrLike, ContentKind::TextLike, ContentKind::ProductTexture};
  std::uint64_t seed = 0;

  void validate() const;
  /// Scene parameters of sample `index`.
  SceneConfig sample_config(std::size_t index) const;
};

struct SampleData {
  RawMosaic raw;
  PolarStack stack;
  Field gt;
  FilmScene scene;
};

SampleData make_sample(const SceneConfig& cfg);

struct ManifestEntry {
  std::string id;
  std::string raw, stack, gt, gt_image, meta;  // paths relative to the dataset root
  std::uint64_t seed = 0;
  std::string scene_digest;
  std::string raw_digest, stack_digest, gt_digest;

  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  static constexpr int kVersion = 1;

  int format_version = kVersion;
  DatasetConfig config;
  std::string config_digest;
  std::vector<ManifestEntry> samples;

  std::string to_json() const;
};

/// Generates `count` samples into `root` and writes manifest.json.
DatasetManifest write_dataset(const std::filesystem::path& root, const DatasetConfig& cfg, std::size_t count);

/// Parses a manifest and checks that every referenced file exists.
DatasetManifest load_manifest(const std::filesystem::path& manifest_path);

/// Demosaic-free stacks and ground truth, in manifest order.
std::vector<EvalSample> load_samples(const std::filesystem::path& manifest_path);

/// Regenerates every sample from the manifest seeds into `root`.
DatasetManifest replay_dataset(const std::filesystem::path& manifest_path, const std::filesystem::path& root);

/// Regenerates in memory and compares against files and digests. Returns
/// one message per mismatch; empty means bit-identical.
std::vector<std::string> verify_dataset(const std::filesystem::path& manifest_path);

}  // namespace polarfilm
