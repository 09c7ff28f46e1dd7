#include "polarfilm/crossval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "polarfilm/blob_io.hpp"
#include "polarfilm/error.hpp"
#include "polarfilm/metrics.hpp"
#include "polarfilm/plm.hpp"
#include "polarfilm/rng.hpp"

namespace polarfilm {

using nlohmann::json;

std::vector<std::size_t> FoldPlan::test_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int f : assignments) ++sizes[static_cast<std::size_t>(f)];
  return sizes;
}

FoldPlan kfold_split(std::size_t sample_count, int k, std::uint64_t seed) {
  if (k < 2) throw ParameterError("fold count must be at least 2");
  if (sample_count < static_cast<std::size_t>(k)) {
    throw DataError("cannot split " + std::to_string(sample_count) + " samples into " + std::to_string(k) + " folds");
  }
  std::vector<std::size_t> order(sample_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = sample_count - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  FoldPlan plan{k, seed, std::vector<int>(sample_count)};
  for (std::size_t pos = 0; pos < sample_count; ++pos) {
    plan.assignments[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
  }
  return plan;
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double variance_of(const std::vector<double>& xs) {
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size());
}

namespace {

std::vector<double> psnrs(const std::vector<FoldScore>& fs) {
  std::vector<double> out;
  for (const auto& f : fs) out.push_back(f.psnr);
  return out;
}

std::vector<double> ssims(const std::vector<FoldScore>& fs) {
  std::vector<double> out;
  for (const auto& f : fs) out.push_back(f.ssim);
  return out;
}

}  // namespace

void Column::summarize() {
  psnr_mean = mean_of(psnrs(folds));
  psnr_variance = variance_of(psnrs(folds));
  ssim_mean = mean_of(ssims(folds));
  ssim_variance = variance_of(ssims(folds));
}

ExternalReference published_reference() {
  ExternalReference r;
  r.note = "published 10-fold results of the full-capacity method on its real capture dataset; "
           "listed for comparison, not reproduced";
  r.psnr_folds = {36.76, 37.29, 36.62, 35.12, 36.93, 37.21, 36.24, 36.67, 36.94, 35.02};
  r.ssim_folds = {0.9852, 0.9859, 0.9822, 0.9767, 0.9845, 0.9833, 0.9836, 0.9830, 0.9850, 0.9749};
  r.psnr_mean = 36.48;
  r.psnr_variance = 0.57;
  r.ssim_mean = 0.9824;
  r.ssim_variance = 1.23e-5;
  return r;
}

const Column& Report::column(const std::string& name) const {
  for (const auto& c : columns) {
    if (c.name == name) return c;
  }
  throw ParameterError("report has no column '" + name + "'");
}

namespace {

json scores_json(const std::vector<FoldScore>& fs) {
  json a = json::array();
  for (const auto& f : fs) a.push_back({{"seed", f.seed}, {"fold", f.fold}, {"psnr", f.psnr}, {"ssim", f.ssim}});
  return a;
}

std::vector<FoldScore> scores_from(const json& a) {
  std::vector<FoldScore> out;
  for (const auto& j : a) {
    out.push_back({j.at("seed").get<std::uint64_t>(), j.at("fold").get<int>(), j.at("psnr").get<double>(),
                   j.at("ssim").get<double>()});
  }
  return out;
}

}  // namespace

std::string Report::to_json() const {
  json j;
  j["format_version"] = kVersion;
  j["fingerprint"] = fingerprint;
  j["k"] = k;
  j["seeds"] = seeds;
  j["folds"] = folds;
  j["variance_convention"] = "population variance of the per-fold values";
  j["psnr_peak"] = 1.0;
  j["psnr_16bit_offset_db"] = 20.0 * std::log10(65535.0);
  json cols = json::array();
  for (const auto& c : columns) {
    cols.push_back({{"name", c.name},
                    {"folds", scores_json(c.folds)},
                    {"psnr_mean", c.psnr_mean},
                    {"psnr_variance", c.psnr_variance},
                    {"ssim_mean", c.ssim_mean},
                    {"ssim_variance", c.ssim_variance}});
  }
  j["columns"] = cols;
  json ds = json::array();
  for (const auto& d : deltas) {
    ds.push_back({{"ablation", d.ablation},
                  {"deltas", scores_json(d.deltas)},
                  {"psnr_mean", d.psnr_mean},
                  {"ssim_mean", d.ssim_mean}});
  }
  j["paired_deltas"] = ds;
  j["external_reference"] = {{"note", reference.note},
                             {"reproduced", false},
                             {"psnr_folds", reference.psnr_folds},
                             {"ssim_folds", reference.ssim_folds},
                             {"psnr_mean", reference.psnr_mean},
                             {"psnr_variance", reference.psnr_variance},
                             {"ssim_mean", reference.ssim_mean},
                             {"ssim_variance", reference.ssim_variance}};
  return j.dump(2) + "\n";
}

Report report_from_json(const std::string& text) {
  Report r;
  try {
    const json j = json::parse(text);
    if (j.at("format_version").get<int>() != Report::kVersion) throw FormatError("unsupported report version");
    r.fingerprint = j.at("fingerprint").get<std::string>();
    r.k = j.at("k").get<int>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    r.folds = j.at("folds").get<std::vector<int>>();
    for (const auto& c : j.at("columns")) {
      Column col;
      col.name = c.at("name").get<std::string>();
      col.folds = scores_from(c.at("folds"));
      col.psnr_mean = c.at("psnr_mean").get<double>();
      col.psnr_variance = c.at("psnr_variance").get<double>();
      col.ssim_mean = c.at("ssim_mean").get<double>();
      col.ssim_variance = c.at("ssim_variance").get<double>();
      r.columns.push_back(std::move(col));
    }
    for (const auto& d : j.at("paired_deltas")) {
      r.deltas.push_back({d.at("ablation").get<std::string>(), scores_from(d.at("deltas")),
                          d.at("psnr_mean").get<double>(), d.at("ssim_mean").get<double>()});
    }
    const json& e = j.at("external_reference");
    r.reference.note = e.at("note").get<std::string>();
    r.reference.psnr_folds = e.at("psnr_folds").get<std::vector<double>>();
    r.reference.ssim_folds = e.at("ssim_folds").get<std::vector<double>>();
    r.reference.psnr_mean = e.at("psnr_mean").get<double>();
    r.reference.psnr_variance = e.at("psnr_variance").get<double>();
    r.reference.ssim_mean = e.at("ssim_mean").get<double>();
    r.reference.ssim_variance = e.at("ssim_variance").get<double>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
  return r;
}

void verify_report(const Report& r) {
  auto check = [](double stored, double recomputed, const std::string& what) {
    if (stored != recomputed && !(std::isnan(stored) && std::isnan(recomputed))) {
      throw DataError("report " + what + " does not match its per-fold values");
    }
  };
  for (const auto& c : r.columns) {
    check(c.psnr_mean, mean_of(psnrs(c.folds)), c.name + " psnr mean");
    check(c.psnr_variance, variance_of(psnrs(c.folds)), c.name + " psnr variance");
    check(c.ssim_mean, mean_of(ssims(c.folds)), c.name + " ssim mean");
    check(c.ssim_variance, variance_of(ssims(c.folds)), c.name + " ssim variance");
  }
  for (const auto& d : r.deltas) {
    check(d.psnr_mean, mean_of(psnrs(d.deltas)), d.ablation + " delta psnr mean");
    check(d.ssim_mean, mean_of(ssims(d.deltas)), d.ablation + " delta ssim mean");
    const Column& full = r.column(to_string(PipelineMode::Full));
    const Column& other = r.column(d.ablation);
    if (full.folds.size() != d.deltas.size() || other.folds.size() != d.deltas.size()) {
      throw DataError("report deltas for " + d.ablation + " are not paired fold by fold");
    }
    for (std::size_t i = 0; i < d.deltas.size(); ++i) {
      check(d.deltas[i].psnr, full.folds[i].psnr - other.folds[i].psnr, d.ablation + " delta psnr");
      check(d.deltas[i].ssim, full.folds[i].ssim - other.folds[i].ssim, d.ablation + " delta ssim");
    }
  }
}

std::string Report::to_table() const {
  std::ostringstream out;
  char buf[256];
  out << "fingerprint " << fingerprint << "  k=" << k << "  seeds=" << seeds.size() << "  folds/seed="
      << folds.size() << "\n";
  std::snprintf(buf, sizeof buf, "%-14s %-5s", "method", "");
  out << buf;
  const std::size_t n = columns.empty() ? 0 : columns.front().folds.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, " %8s", ("s" + std::to_string(columns.front().folds[i].seed) + "f" +
                                            std::to_string(columns.front().folds[i].fold))
                                               .c_str());
    out << buf;
  }
  out << "        mu     var\n";
  for (const auto& c : columns) {
    std::snprintf(buf, sizeof buf, "%-14s %-5s", c.name.c_str(), "PSNR");
    out << buf;
    for (const auto& f : c.folds) {
      std::snprintf(buf, sizeof buf, " %8.2f", f.psnr);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "  %8.2f %7.3g\n", c.psnr_mean, c.psnr_variance);
    out << buf;
    std::snprintf(buf, sizeof buf, "%-14s %-5s", "", "SSIM");
    out << buf;
    for (const auto& f : c.folds) {
      std::snprintf(buf, sizeof buf, " %8.4f", f.ssim);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "  %8.4f %7.3g\n", c.ssim_mean, c.ssim_variance);
    out << buf;
  }
  for (const auto& d : deltas) {
    std::snprintf(buf, sizeof buf, "full - %-7s dPSNR", d.ablation.c_str());
    out << buf;
    for (const auto& f : d.deltas) {
      std::snprintf(buf, sizeof buf, " %+8.2f", f.psnr);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "  %+8.2f\n", d.psnr_mean);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "reference (not reproduced): PSNR mu %.2f var %.2f, SSIM mu %.4f var %.3g\n",
                reference.psnr_mean, reference.psnr_variance, reference.ssim_mean, reference.ssim_variance);
  out << buf;
  return out.str();
}

namespace {

Field clamp01(Field f) {
  for (double& v : f.values()) v = std::clamp(v, 0.0, 1.0);
  return f;
}

template <typename Fn>
Scores average_scores(const std::vector<EvalSample>& samples, const std::vector<std::size_t>& indices, Fn&& estimate) {
  if (indices.empty()) throw DataError("no samples to evaluate");
  Scores s;
  for (std::size_t i : indices) {
    const EvalSample& e = samples.at(i);
    const Field est = estimate(e);
    s.psnr += psnr(est, e.gt);
    s.ssim += ssim(est, e.gt);
  }
  s.psnr /= static_cast<double>(indices.size());
  s.ssim /= static_cast<double>(indices.size());
  return s;
}

}  // namespace

Scores evaluate_pipeline(const Pipeline<float>& pipeline, const std::vector<EvalSample>& samples,
                         const std::vector<std::size_t>& indices) {
  return average_scores(samples, indices, [&](const EvalSample& e) { return pipeline.reconstruct(e.stack); });
}

Scores evaluate_intensity_baseline(const std::vector<EvalSample>& samples, const std::vector<std::size_t>& indices) {
  return average_scores(samples, indices,
                        [](const EvalSample& e) { return clamp01(stokes_from_stack(e.stack).s0); });
}

Scores evaluate_prior_baseline(const std::vector<EvalSample>& samples, const std::vector<std::size_t>& indices) {
  return average_scores(samples, indices, [](const EvalSample& e) {
    Field p = analytic_prior(stokes_from_stack(e.stack)).p;
    for (double& v : p.values()) v *= 2.0;
    return clamp01(std::move(p));
  });
}

namespace {

constexpr const char* kIntensityBaseline = "input_intensity";
constexpr const char* kPriorBaseline = "analytic_prior";

std::string fingerprint_of(const std::vector<EvalSample>& samples, const TrainConfig& cfg, const PipelineSpec& spec,
                           const CrossvalOptions& o, const std::vector<PipelineMode>& modes) {
  json j{{"base_lr", cfg.base_lr},
         {"decay", cfg.decay},
         {"decay_interval", cfg.decay_interval},
         {"batch", cfg.batch},
         {"max_iterations", cfg.max_iterations},
         {"crop", cfg.crop},
         {"anet", {spec.anet.blocks, spec.anet.convs, spec.anet.growth, spec.anet.features}},
         {"rnet", {spec.rnet.blocks, spec.rnet.convs, spec.rnet.growth, spec.rnet.features}},
         {"k", o.k},
         {"seeds", o.seeds},
         {"folds", o.folds}};
  json m = json::array();
  for (auto mode : modes) m.push_back(to_string(mode));
  j["modes"] = m;
  std::vector<std::uint8_t> bytes;
  for (const auto& s : samples) {
    const auto b = encode_blob(blob_from_field(s.gt));
    bytes.insert(bytes.end(), b.begin(), b.end());
    const auto c = encode_blob(blob_from_stack(s.stack));
    bytes.insert(bytes.end(), c.begin(), c.end());
  }
  j["data"] = digest_hex(bytes);
  return digest_hex(j.dump());
}

Report run_modes(const std::vector<EvalSample>& samples, const TrainConfig& cfg, const PipelineSpec& base,
                 const CrossvalOptions& o, const std::vector<PipelineMode>& modes) {
  if (o.seeds.empty()) throw ParameterError("cross-validation needs at least one seed");
  Report r;
  r.k = o.k;
  r.seeds = o.seeds;
  if (o.folds.empty()) {
    for (int f = 0; f < o.k; ++f) r.folds.push_back(f);
  } else {
    r.folds = o.folds;
  }
  for (int f : r.folds) {
    if (f < 0 || f >= o.k) throw ParameterError("fold index " + std::to_string(f) + " outside [0, k)");
  }
  r.fingerprint = fingerprint_of(samples, cfg, base, o, modes);
  for (auto mode : modes) r.columns.push_back({to_string(mode), {}, 0, 0, 0, 0});
  if (o.baselines) {
    r.columns.push_back({kIntensityBaseline, {}, 0, 0, 0, 0});
    r.columns.push_back({kPriorBaseline, {}, 0, 0, 0, 0});
  }

  for (std::uint64_t seed : o.seeds) {
    const FoldPlan plan = kfold_split(samples.size(), o.k, seed);
    for (int fold : r.folds) {
      const auto train_idx = plan.train_indices(fold);
      const auto test_idx = plan.test_indices(fold);
      std::vector<TrainSample> train_set;
      train_set.reserve(train_idx.size());
      for (std::size_t i : train_idx) train_set.push_back({samples[i].stack, samples[i].gt});
      for (std::size_t m = 0; m < modes.size(); ++m) {
        PipelineSpec spec = base;
        spec.mode = modes[m];
        TrainConfig c = cfg;
        c.seed = seed;
        Scores s;
        try {
          const TrainResult trained = train(c, spec, train_set);
          s = evaluate_pipeline(trained.pipeline, samples, test_idx);
          if (o.on_trained) o.on_trained(seed, fold, trained.pipeline, test_idx);
        } catch (const TrainingError& e) {
          throw TrainingError("fold " + std::to_string(fold) + " (seed " + std::to_string(seed) + ", " +
                              to_string(modes[m]) + "): " + e.what());
        }
        r.columns[m].folds.push_back({seed, fold, s.psnr, s.ssim});
        if (o.progress) {
          char buf[160];
          std::snprintf(buf, sizeof buf, "seed %llu fold %d %-10s psnr %.3f ssim %.4f",
                        static_cast<unsigned long long>(seed), fold, to_string(modes[m]).c_str(), s.psnr, s.ssim);
          o.progress(buf);
        }
      }
      if (o.baselines) {
        const Scores a = evaluate_intensity_baseline(samples, test_idx);
        const Scores b = evaluate_prior_baseline(samples, test_idx);
        r.columns[modes.size()].folds.push_back({seed, fold, a.psnr, a.ssim});
        r.columns[modes.size() + 1].folds.push_back({seed, fold, b.psnr, b.ssim});
      }
    }
  }
  for (auto& c : r.columns) c.summarize();

  const auto full = std::find(modes.begin(), modes.end(), PipelineMode::Full);
  if (full != modes.end()) {
    const Column& fc = r.columns[static_cast<std::size_t>(full - modes.begin())];
    for (std::size_t m = 0; m < modes.size(); ++m) {
      if (modes[m] == PipelineMode::Full) continue;
      PairedDelta d{r.columns[m].name, {}, 0, 0};
      for (std::size_t i = 0; i < fc.folds.size(); ++i) {
        const FoldScore& a = fc.folds[i];
        const FoldScore& b = r.columns[m].folds[i];
        d.deltas.push_back({a.seed, a.fold, a.psnr - b.psnr, a.ssim - b.ssim});
      }
      d.psnr_mean = mean_of(psnrs(d.deltas));
      d.ssim_mean = mean_of(ssims(d.deltas));
      r.deltas.push_back(std::move(d));
    }
  }
  return r;
}

}  // namespace

Report run_crossval(const std::vector<EvalSample>& samples, const TrainConfig& cfg, const PipelineSpec& spec,
                    const CrossvalOptions& options) {
  return run_modes(samples, cfg, spec, options, {spec.mode});
}

Report run_ablations(const std::vector<EvalSample>& samples, const TrainConfig& cfg, const PipelineSpec& base,
                     const CrossvalOptions& options, const std::vector<PipelineMode>& modes) {
  if (modes.empty()) throw ParameterError("no pipeline modes to compare");
  return run_modes(samples, cfg, base, options, modes);
}

}  // namespace polarfilm
