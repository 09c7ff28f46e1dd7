#include "polarfilm/dataset.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

#include "polarfilm/blob_io.hpp"
#include "polarfilm/config.hpp"
#include "polarfilm/error.hpp"
#include "polarfilm/rng.hpp"

namespace polarfilm {

using nlohmann::json;
namespace fs = std::filesystem;

void DatasetConfig::validate() const {
  if (kinds.empty()) throw ParameterError("dataset config field 'kinds': at least one content kind is required");
  scene.validate();
}

SceneConfig DatasetConfig::sample_config(std::size_t index) const {
  SceneConfig s = scene;
  s.content = kinds[index % kinds.size()];
  s.seed = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(index)));
  return s;
}

SampleData make_sample(const SceneConfig& cfg) {
  SampleData d;
  d.scene = generate_scene(cfg);
  RenderedCapture rc = render_captures(d.scene, cfg.noise_sigma);
  d.raw = mosaic(rc.stack);
  d.stack = std::move(rc.stack);
  d.gt = std::move(rc.gt);
  return d;
}

namespace {

struct Encoded {
  std::vector<std::uint8_t> raw, stack, gt, gt_image;
  std::string meta;
};

std::string scene_json(const SceneConfig& s) {
  json j{{"content", to_string(s.content)},
         {"seed", s.seed},
         {"width", s.width},
         {"height", s.height},
         {"wrinkle_density", s.wrinkle_density},
         {"highlight_strength", s.highlight_strength},
         {"transmittance_min", s.transmittance_min},
         {"transmittance_max", s.transmittance_max},
         {"texture_amplitude", s.texture_amplitude},
         {"highlight_dolp_min", s.highlight_dolp_min},
         {"highlight_dolp_max", s.highlight_dolp_max},
         {"noise_sigma", s.noise_sigma}};
  return j.dump();
}

std::string sample_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%05zu", i);
  return buf;
}

Encoded encode_sample(const SceneConfig& cfg, const std::string& id) {
  const SampleData d = make_sample(cfg);
  Encoded e;
  e.raw = encode_pgm16(d.raw.data);
  e.stack = encode_blob(blob_from_stack(d.stack));
  e.gt = encode_blob(blob_from_field(d.gt));
  e.gt_image = encode_pgm16(d.gt);
  json meta = json::parse(scene_json(cfg));
  meta["id"] = id;
  meta["ridge_count"] = d.scene.ridge_count;
  meta["layout"] = {{d.raw.layout.channel[0][0], d.raw.layout.channel[0][1]},
                    {d.raw.layout.channel[1][0], d.raw.layout.channel[1][1]}};
  e.meta = meta.dump(2) + "\n";
  return e;
}

ManifestEntry entry_for(std::size_t i, const SceneConfig& cfg, const Encoded& e) {
  ManifestEntry m;
  m.id = sample_id(i);
  const std::string dir = "samples/" + m.id + "/";
  m.raw = dir + "raw.pgm";
  m.stack = dir + "stack.pftb";
  m.gt = dir + "gt.pftb";
  m.gt_image = dir + "gt.pgm";
  m.meta = dir + "meta.json";
  m.seed = cfg.seed;
  m.scene_digest = digest_hex(scene_json(cfg));
  m.raw_digest = digest_hex(e.raw);
  m.stack_digest = digest_hex(e.stack);
  m.gt_digest = digest_hex(e.gt);
  return m;
}

DatasetManifest generate(const fs::path& root, const DatasetConfig& cfg, std::size_t count) {
  cfg.validate();
  DatasetManifest m;
  m.config = cfg;
  m.config_digest = digest_hex(dataset_config_json(cfg));
  for (std::size_t i = 0; i < count; ++i) {
    const SceneConfig sc = cfg.sample_config(i);
    const Encoded e = encode_sample(sc, sample_id(i));
    ManifestEntry entry = entry_for(i, sc, e);
    write_file(root / entry.raw, e.raw);
    write_file(root / entry.stack, e.stack);
    write_file(root / entry.gt, e.gt);
    write_file(root / entry.gt_image, e.gt_image);
    write_text(root / entry.meta, e.meta);
    m.samples.push_back(std::move(entry));
  }
  write_text(root / "manifest.json", m.to_json());
  return m;
}

}  // namespace

std::string DatasetManifest::to_json() const {
  json samples_json = json::array();
  for (const auto& s : samples) {
    samples_json.push_back({{"id", s.id},
                            {"raw", s.raw},
                            {"stack", s.stack},
                            {"gt", s.gt},
                            {"gt_image", s.gt_image},
                            {"meta", s.meta},
                            {"seed", s.seed},
                            {"scene_digest", s.scene_digest},
                            {"raw_digest", s.raw_digest},
                            {"stack_digest", s.stack_digest},
                            {"gt_digest", s.gt_digest}});
  }
  json j{{"format_version", format_version},
         {"config", json::parse(dataset_config_json(config))},
         {"config_digest", config_digest},
         {"count", samples.size()},
         {"samples", samples_json}};
  return j.dump(2) + "\n";
}

DatasetManifest write_dataset(const fs::path& root, const DatasetConfig& cfg, std::size_t count) {
  return generate(root, cfg, count);
}

DatasetManifest load_manifest(const fs::path& manifest_path) {
  const std::string text = read_text(manifest_path);
  DatasetManifest m;
  try {
    const json j = json::parse(text);
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != DatasetManifest::kVersion) {
      throw FormatError("manifest format version " + std::to_string(m.format_version) + " is not supported (expected " +
                        std::to_string(DatasetManifest::kVersion) + ")");
    }
    try {
      m.config = parse_dataset_config(j.at("config").dump());
    } catch (const ParameterError& e) {
      throw FormatError(std::string("manifest config: ") + e.what());
    }
    m.config_digest = j.at("config_digest").get<std::string>();
    for (const auto& s : j.at("samples")) {
      ManifestEntry e;
      e.id = s.at("id").get<std::string>();
      e.raw = s.at("raw").get<std::string>();
      e.stack = s.at("stack").get<std::string>();
      e.gt = s.at("gt").get<std::string>();
      e.gt_image = s.at("gt_image").get<std::string>();
      e.meta = s.at("meta").get<std::string>();
      e.seed = s.at("seed").get<std::uint64_t>();
      e.scene_digest = s.at("scene_digest").get<std::string>();
      e.raw_digest = s.at("raw_digest").get<std::string>();
      e.stack_digest = s.at("stack_digest").get<std::string>();
      e.gt_digest = s.at("gt_digest").get<std::string>();
      m.samples.push_back(std::move(e));
    }
    if (j.at("count").get<std::size_t>() != m.samples.size()) throw FormatError("manifest count disagrees with entries");
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string() + ": malformed manifest (" + e.what() + ")");
  }
  const fs::path root = manifest_path.parent_path();
  for (const auto& s : m.samples) {
    for (const std::string* rel : {&s.raw, &s.stack, &s.gt, &s.gt_image, &s.meta}) {
      if (!fs::exists(root / *rel)) throw DataError("manifest references missing file '" + (root / *rel).string() + "'");
    }
  }
  return m;
}

std::vector<EvalSample> load_samples(const fs::path& manifest_path) {
  const DatasetManifest m = load_manifest(manifest_path);
  const fs::path root = manifest_path.parent_path();
  std::vector<EvalSample> out;
  out.reserve(m.samples.size());
  for (const auto& s : m.samples) {
    out.push_back({stack_from_blob(read_blob(root / s.stack)), field_from_blob(read_blob(root / s.gt))});
  }
  return out;
}

DatasetManifest replay_dataset(const fs::path& manifest_path, const fs::path& root) {
  const DatasetManifest m = load_manifest(manifest_path);
  return generate(root, m.config, m.samples.size());
}

std::vector<std::string> verify_dataset(const fs::path& manifest_path) {
  const DatasetManifest m = load_manifest(manifest_path);
  const fs::path root = manifest_path.parent_path();
  std::vector<std::string> problems;
  if (digest_hex(dataset_config_json(m.config)) != m.config_digest) problems.push_back("config digest mismatch");
  for (std::size_t i = 0; i < m.samples.size(); ++i) {
    const ManifestEntry& stored = m.samples[i];
    const SceneConfig sc = m.config.sample_config(i);
    const Encoded e = encode_sample(sc, sample_id(i));
    const ManifestEntry fresh = entry_for(i, sc, e);
    if (!(fresh == stored)) problems.push_back(stored.id + ": manifest entry differs from regenerated sample");
    auto compare = [&](const std::string& rel, const std::vector<std::uint8_t>& bytes) {
      if (read_file(root / rel) != bytes) problems.push_back(stored.id + ": " + rel + " differs from regenerated bytes");
    };
    compare(stored.raw, e.raw);
    compare(stored.stack, e.stack);
    compare(stored.gt, e.gt);
    compare(stored.gt_image, e.gt_image);
    compare(stored.meta, std::vector<std::uint8_t>(e.meta.begin(), e.meta.end()));
  }
  return problems;
}

}  // namespace polarfilm
