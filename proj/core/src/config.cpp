#include "polarfilm/config.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "polarfilm/error.hpp"

namespace polarfilm {

using nlohmann::json;

namespace {

int line_of_offset(const std::string& text, std::size_t offset) {
  int line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) line += text[i] == '\n';
  return line;
}

// Objects are read field by field; whatever is left over is an error.
class Reader {
 public:
  Reader(const std::string& text, const json& obj, std::string path) : text_(text), obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail(path_.empty() ? "config" : path_, "must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      fail(name(key), "has the wrong type");
    }
  }

  Reader child(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    static const json kEmpty = json::object();
    return Reader(text_, it == obj_.end() ? kEmpty : *it, name(key));
  }

  bool has(const char* key) const { return obj_.contains(key); }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) fail(name(key), "is not a recognized field");
    }
  }

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    const std::string leaf = field.substr(field.rfind('.') == std::string::npos ? 0 : field.rfind('.') + 1);
    const auto pos = text_.find("\"" + leaf + "\"");
    std::string where = pos == std::string::npos ? "" : "line " + std::to_string(line_of_offset(text_, pos)) + ": ";
    throw ParameterError("config " + where + "field '" + field + "' " + what);
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const std::string& text_;
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParameterError("config line " + std::to_string(line_of_offset(text, e.byte)) + ": malformed JSON (" +
                         e.what() + ")");
  }
}

void check_version(Reader& r, const json& j) {
  int version = 0;
  if (!j.contains("format_version")) r.fail("format_version", "is required");
  r.get("format_version", version);
  if (version != kConfigVersion) {
    r.fail("format_version", "is " + std::to_string(version) + ", expected " + std::to_string(kConfigVersion));
  }
}

void read_descriptor(Reader r, RdnDescriptor& d) {
  r.get("blocks", d.blocks);
  r.get("convs", d.convs);
  r.get("growth", d.growth);
  r.get("features", d.features);
  r.finish();
  try {
    d.validate();
  } catch (const ParameterError& e) {
    r.fail(r.name("blocks").substr(0, r.name("blocks").rfind('.')), e.what());
  }
}

json descriptor_json(const RdnDescriptor& d) {
  return {{"blocks", d.blocks}, {"convs", d.convs}, {"growth", d.growth}, {"features", d.features}};
}

}  // namespace

DatasetConfig parse_dataset_config(const std::string& text) {
  const json j = parse_json(text);
  Reader r(text, j, "");
  check_version(r, j);
  DatasetConfig cfg;
  r.get("seed", cfg.seed);
  if (r.has("kinds")) {
    std::vector<std::string> names;
    r.get("kinds", names);
    cfg.kinds.clear();
    for (const auto& n : names) {
      try {
        cfg.kinds.push_back(content_kind_from_string(n));
      } catch (const ParameterError&) {
        r.fail("kinds", "contains unknown content kind '" + n + "'");
      }
    }
  }
  Reader s = r.child("scene");
  SceneConfig& sc = cfg.scene;
  s.get("width", sc.width);
  s.get("height", sc.height);
  s.get("wrinkle_density", sc.wrinkle_density);
  s.get("highlight_strength", sc.highlight_strength);
  s.get("transmittance_min", sc.transmittance_min);
  s.get("transmittance_max", sc.transmittance_max);
  s.get("texture_amplitude", sc.texture_amplitude);
  s.get("highlight_dolp_min", sc.highlight_dolp_min);
  s.get("highlight_dolp_max", sc.highlight_dolp_max);
  s.get("noise_sigma", sc.noise_sigma);
  s.finish();
  r.finish();
  try {
    cfg.validate();
  } catch (const ParameterError& e) {
    // validate() messages start with the field name
    const std::string msg = e.what();
    const auto q1 = msg.find('\''), q2 = msg.find('\'', q1 + 1);
    if (q1 != std::string::npos && q2 != std::string::npos) {
      s.fail(s.name(msg.substr(q1 + 1, q2 - q1 - 1)), "is out of range (" + msg + ")");
    }
    throw;
  }
  return cfg;
}

std::string dataset_config_json(const DatasetConfig& cfg) {
  const SceneConfig& s = cfg.scene;
  json kinds = json::array();
  for (auto k : cfg.kinds) kinds.push_back(to_string(k));
  json j{{"format_version", kConfigVersion},
         {"seed", cfg.seed},
         {"kinds", kinds},
         {"scene",
          {{"width", s.width},
           {"height", s.height},
           {"wrinkle_density", s.wrinkle_density},
           {"highlight_strength", s.highlight_strength},
           {"transmittance_min", s.transmittance_min},
           {"transmittance_max", s.transmittance_max},
           {"texture_amplitude", s.texture_amplitude},
           {"highlight_dolp_min", s.highlight_dolp_min},
           {"highlight_dolp_max", s.highlight_dolp_max},
           {"noise_sigma", s.noise_sigma}}}};
  return j.dump(2) + "\n";
}

RunConfig parse_run_config(const std::string& text) {
  const json j = parse_json(text);
  Reader r(text, j, "");
  check_version(r, j);
  RunConfig cfg;
  std::string mode = to_string(cfg.spec.mode);
  r.get("mode", mode);
  try {
    cfg.spec.mode = pipeline_mode_from_string(mode);
  } catch (const ParameterError& e) {
    r.fail("mode", std::string("is invalid: ") + e.what());
  }
  read_descriptor(r.child("anet"), cfg.spec.anet);
  read_descriptor(r.child("rnet"), cfg.spec.rnet);

  Reader t = r.child("train");
  TrainConfig& tc = cfg.train;
  t.get("base_lr", tc.base_lr);
  t.get("decay", tc.decay);
  t.get("decay_interval", tc.decay_interval);
  t.get("batch", tc.batch);
  t.get("max_iterations", tc.max_iterations);
  t.get("seed", tc.seed);
  t.get("crop", tc.crop);
  t.get("beta1", tc.beta1);
  t.get("beta2", tc.beta2);
  t.get("eps", tc.eps);
  t.get("checkpoint_interval", tc.checkpoint_interval);
  t.finish();
  try {
    tc.validate();
  } catch (const ParameterError& e) {
    const std::string msg = e.what();
    const auto q1 = msg.find('\''), q2 = msg.find('\'', q1 + 1);
    if (q1 != std::string::npos && q2 != std::string::npos) t.fail(t.name(msg.substr(q1 + 1, q2 - q1 - 1)), msg);
    throw;
  }

  Reader e = r.child("eval");
  e.get("k", cfg.eval.k);
  e.get("seeds", cfg.eval.seeds);
  e.get("folds", cfg.eval.folds);
  e.finish();
  if (cfg.eval.k < 2) e.fail("eval.k", "must be at least 2");
  if (cfg.eval.seeds.empty()) e.fail("eval.seeds", "must list at least one seed");
  for (int f : cfg.eval.folds) {
    if (f < 0 || f >= cfg.eval.k) e.fail("eval.folds", "contains fold " + std::to_string(f) + " outside [0, k)");
  }
  r.finish();
  return cfg;
}

std::string run_config_json(const RunConfig& cfg) {
  const TrainConfig& t = cfg.train;
  json j{{"format_version", kConfigVersion},
         {"mode", to_string(cfg.spec.mode)},
         {"anet", descriptor_json(cfg.spec.anet)},
         {"rnet", descriptor_json(cfg.spec.rnet)},
         {"train",
          {{"base_lr", t.base_lr},
           {"decay", t.decay},
           {"decay_interval", t.decay_interval},
           {"batch", t.batch},
           {"max_iterations", t.max_iterations},
           {"seed", t.seed},
           {"crop", t.crop},
           {"beta1", t.beta1},
           {"beta2", t.beta2},
           {"eps", t.eps},
           {"checkpoint_interval", t.checkpoint_interval}}},
         {"eval", {{"k", cfg.eval.k}, {"seeds", cfg.eval.seeds}, {"folds", cfg.eval.folds}}}};
  return j.dump(2) + "\n";
}

}  // namespace polarfilm
