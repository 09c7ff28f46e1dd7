// polarfilm command-line tool.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error
// (including a missing checkpoint), 3 data or format error, 4 shape mismatch.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif
#include <nlohmann/json.hpp>

#include "polarfilm/blob_io.hpp"
#include "polarfilm/checkpoint.hpp"
#include "polarfilm/config.hpp"
#include "polarfilm/crossval.hpp"
#include "polarfilm/dataset.hpp"
#include "polarfilm/error.hpp"
#include "polarfilm/mosaic.hpp"
#include "polarfilm/plm.hpp"
#include "polarfilm/polar.hpp"
#include "polarfilm/render.hpp"
#include "polarfilm/train.hpp"

namespace fs = std::filesystem;
using namespace polarfilm;

namespace {

enum Exit { kOk = 0, kRuntime = 1, kUsage = 2, kData = 3, kShape = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Checkpoint require_checkpoint(const std::string& path) {
  if (path.empty()) throw UsageError("a checkpoint is required (--checkpoint)");
  if (!fs::exists(path)) throw UsageError("checkpoint '" + path + "' not found");
  return load_checkpoint(path);
}

DemosaicMethod method_from(const std::string& name) {
  if (name == "bilinear") return DemosaicMethod::Bilinear;
  if (name == "edge-aware") return DemosaicMethod::EdgeAware;
  if (name == "subsample") return DemosaicMethod::Subsample;
  throw UsageError("unknown demosaic method '" + name + "'");
}

ExtremaMode extrema_from(const std::string& name) {
  if (name == "physical") return ExtremaMode::PhysConsistent;
  if (name == "literal") return ExtremaMode::Literal;
  throw UsageError("unknown extrema mode '" + name + "'");
}

bool is_pgm(const fs::path& p) { return p.extension() == ".pgm"; }

PolarStack read_stack_or_raw(const fs::path& in, DemosaicMethod method) {
  if (is_pgm(in)) return demosaic(RawMosaic{read_pgm16(in), MosaicLayout::standard()}, method);
  return stack_from_blob(read_blob(in));
}

void write_field(const fs::path& out, const Field& f) {
  if (is_pgm(out)) {
    Field clamped = f;
    for (double& v : clamped.values()) v = std::clamp(v, 0.0, 1.0);
    write_pgm16(out, clamped);
  } else {
    write_blob(out, blob_from_field(f));
  }
}

std::string read_config_text(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("config '" + path + "' not found");
  return read_text(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polarfilm: polarization-guided highlight removal for film-covered objects"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  bool seed_given = false;
  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { seed = s, seed_given = true; }, "Seed for every random draw of this command");
  };

  // simulate
  std::string config_path, out_path, in_path, manifest_path, checkpoint_path, prior_path, angle_path;
  std::size_t count = 10;
  const CLI::IsMember kMethods({"bilinear", "edge-aware", "subsample"});
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset and its manifest");
  simulate->add_option("--config", config_path, "Dataset config (JSON)");
  simulate->add_option("--out", out_path, "Output directory")->required();
  simulate->add_option("--count", count, "Number of samples")->check(CLI::NonNegativeNumber);
  add_seed(simulate);

  auto* replay = app.add_subcommand("replay", "Regenerate a dataset from its manifest seeds");
  replay->add_option("--manifest", manifest_path, "manifest.json")->required();
  replay->add_option("--out", out_path, "Output directory")->required();

  auto* verify = app.add_subcommand("verify", "Check a dataset against regenerated content");
  verify->add_option("--manifest", manifest_path, "manifest.json")->required();

  std::string method = "bilinear";
  auto* demosaic_cmd = app.add_subcommand("demosaic", "Raw mosaic (PGM) to a four-angle stack");
  demosaic_cmd->add_option("--in", in_path, "Raw 16-bit PGM")->required();
  demosaic_cmd->add_option("--out", out_path, "Stack blob")->required();
  demosaic_cmd->add_option("--method", method, "bilinear | edge-aware | subsample")->check(kMethods);

  auto* stokes_cmd = app.add_subcommand("stokes", "Stack to Stokes maps, AoP and DoP");
  stokes_cmd->add_option("--in", in_path, "Stack blob or raw PGM")->required();
  stokes_cmd->add_option("--out", out_path, "Stokes blob (s0, s1, s2)")->required();
  std::string aop_out, dop_out;
  stokes_cmd->add_option("--aop", aop_out, "Also write the AoP map");
  stokes_cmd->add_option("--dop", dop_out, "Also write the DoP map");
  stokes_cmd->add_option("--method", method, "Demosaic method for raw input")->check(kMethods);

  auto* infer = app.add_subcommand("infer", "Angle map from the angle network");
  infer->add_option("--in", in_path, "Stack blob or raw PGM")->required();
  infer->add_option("--checkpoint", checkpoint_path, "Trained checkpoint");
  infer->add_option("--out", out_path, "Angle blob")->required();
  infer->add_option("--method", method, "Demosaic method for raw input")->check(kMethods);

  bool analytic = false;
  std::string extrema = "physical";
  auto* prior = app.add_subcommand("prior", "Minimal-highlight prior");
  prior->add_option("--in", in_path, "Stack blob or raw PGM")->required();
  prior->add_option("--out", out_path, "Prior blob (or .pgm image)")->required();
  prior->add_flag("--analytic", analytic, "Use the closed-form minimizer instead of the angle network");
  prior->add_option("--angle", angle_path, "Angle blob from `infer`");
  prior->add_option("--checkpoint", checkpoint_path, "Run the angle network from this checkpoint");
  prior->add_option("--extrema", extrema, "physical | literal")->check(CLI::IsMember({"physical", "literal"}));
  prior->add_option("--method", method, "Demosaic method for raw input")->check(kMethods);

  auto* reconstruct = app.add_subcommand("reconstruct", "Highlight-free reconstruction");
  reconstruct->add_option("--in", in_path, "Raw PGM (single shot) or stack blob")->required();
  reconstruct->add_option("--checkpoint", checkpoint_path, "Trained checkpoint");
  reconstruct->add_option("--prior", prior_path, "Precomputed prior blob");
  reconstruct->add_option("--out", out_path, "Reconstruction blob (or .pgm image)")->required();
  reconstruct->add_option("--method", method, "Demosaic method for raw input")->check(kMethods);

  std::string data_path, resume_path, mode_override;
  bool dry_run = false;
  auto* train_cmd = app.add_subcommand("train", "Train the pipeline on a dataset");
  train_cmd->add_option("--config", config_path, "Run config (JSON)")->required();
  train_cmd->add_option("--data", data_path, "Dataset manifest")->required();
  train_cmd->add_option("--out", out_path, "Output directory");
  train_cmd->add_option("--resume", resume_path, "Continue from a checkpoint");
  train_cmd->add_option("--mode", mode_override, "full | no_prior | no_aop_dop | no_polar");
  train_cmd->add_flag("--dry-run", dry_run, "Validate config and dataset, then exit");
  add_seed(train_cmd);

  int folds = 0;
  bool quick = false, ablation = false, figures = false;
  std::string export_dir;
  auto* eval = app.add_subcommand("eval", "k-fold cross-validation and ablations");
  eval->add_option("--config", config_path, "Run config (JSON)")->required();
  eval->add_option("--data", data_path, "Dataset manifest")->required();
  eval->add_option("--out", out_path, "Report directory")->required();
  eval->add_option("--folds", folds, "Fold count k (overrides the config)")->check(CLI::Range(2, 1000));
  eval->add_flag("--quick", quick, "Short training (200 iterations) for smoke runs");
  eval->add_flag("--ablation", ablation, "Compare full, no_prior, no_aop_dop and no_polar");
  eval->add_flag("--figures", figures, "Render box plots of per-fold PSNR");
  eval->add_option("--export", export_dir, "Write held-out reconstructions for external scoring");
  eval->add_option("--mode", mode_override, "Pipeline mode when not running ablations");
  add_seed(eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate) {
      DatasetConfig cfg;
      if (!config_path.empty()) cfg = parse_dataset_config(read_config_text(config_path));
      if (seed_given) cfg.seed = seed;
      const DatasetManifest m = write_dataset(out_path, cfg, count);
      std::cout << "wrote " << m.samples.size() << " samples to " << out_path << "\n";
    } else if (*replay) {
      const DatasetManifest m = replay_dataset(manifest_path, out_path);
      std::cout << "regenerated " << m.samples.size() << " samples into " << out_path << "\n";
    } else if (*verify) {
      const auto problems = verify_dataset(manifest_path);
      for (const auto& p : problems) std::cerr << p << "\n";
      if (!problems.empty()) return kData;
      std::cout << "dataset matches its manifest\n";
    } else if (*demosaic_cmd) {
      const RawMosaic raw{read_pgm16(in_path), MosaicLayout::standard()};
      write_blob(out_path, blob_from_stack(demosaic(raw, method_from(method))));
    } else if (*stokes_cmd) {
      const StokesMap st = stokes_from_stack(read_stack_or_raw(in_path, method_from(method)));
      write_blob(out_path, blob_from_stokes(st));
      if (!aop_out.empty()) write_field(aop_out, aop(st).a);
      if (!dop_out.empty()) write_field(dop_out, dop(st));
    } else if (*infer) {
      const Checkpoint ckpt = require_checkpoint(checkpoint_path);
      const Pipeline<float> pipe = restore(ckpt);
      write_field(out_path, pipe.infer_angle(read_stack_or_raw(in_path, method_from(method))).a);
    } else if (*prior) {
      const PolarStack stack = read_stack_or_raw(in_path, method_from(method));
      const StokesMap st = stokes_from_stack(stack);
      const int sources = analytic + !angle_path.empty() + !checkpoint_path.empty();
      if (sources != 1) throw UsageError("prior needs exactly one of --analytic, --angle, --checkpoint");
      PriorField p;
      if (analytic) {
        p = analytic_prior(st);
        if (extrema_from(extrema) != ExtremaMode::PhysConsistent) {
          AngleMap a{Field(st.s0.height(), st.s0.width(), std::numbers::pi / 2)};
          p = plm_prior(st, a, ExtremaMode::Literal, PriorSource::Analytic);
        }
      } else {
        AngleMap a;
        if (!angle_path.empty()) {
          a.a = field_from_blob(read_blob(angle_path));
        } else {
          a = restore(require_checkpoint(checkpoint_path)).infer_angle(stack);
        }
        p = plm_prior(st, a, extrema_from(extrema));
      }
      write_field(out_path, p.p);
    } else if (*reconstruct) {
      const Checkpoint ckpt = require_checkpoint(checkpoint_path);
      const Pipeline<float> pipe = restore(ckpt);
      const PolarStack stack = read_stack_or_raw(in_path, method_from(method));
      Field rec;
      if (!prior_path.empty()) {
        const PriorField p{field_from_blob(read_blob(prior_path)), ExtremaMode::PhysConsistent, PriorSource::Network};
        rec = pipe.reconstruct_with_prior(stack, &p);
      } else {
        rec = pipe.reconstruct(stack);
      }
      write_field(out_path, rec);
    } else if (*train_cmd) {
      RunConfig rc = parse_run_config(read_config_text(config_path));
      if (!mode_override.empty()) rc.spec.mode = pipeline_mode_from_string(mode_override);
      if (seed_given) rc.train.seed = seed;
      const auto data = load_samples(data_path);
      std::vector<TrainSample> samples;
      for (const auto& s : data) samples.push_back({s.stack, s.gt});
      if (dry_run) {
        rc.train.validate();
        const Pipeline<float> pipe(rc.spec, rc.train.seed);
        std::cout << "config ok: mode " << to_string(rc.spec.mode) << ", " << pipe.parameter_count()
                  << " parameters, " << samples.size() << " samples\n";
        return kOk;
      }
      if (out_path.empty()) throw UsageError("--out is required unless --dry-run is given");
      fs::create_directories(out_path);
      std::ofstream log(fs::path(out_path) / "train_log.jsonl");
      std::optional<Checkpoint> resume;
      if (!resume_path.empty()) resume = require_checkpoint(resume_path);
      TrainHooks hooks;
      hooks.log = &log;
      hooks.dump_dir = out_path;
      hooks.resume = resume ? &*resume : nullptr;
      hooks.on_checkpoint = [&](const Checkpoint& c) {
        save_checkpoint(fs::path(out_path) / ("checkpoint_" + std::to_string(c.iteration) + ".pfck"), c);
      };
      const TrainResult r = train(rc.train, rc.spec, samples, hooks);
      save_checkpoint(fs::path(out_path) / "checkpoint.pfck", r.checkpoint(rc.train.seed));
      write_text(fs::path(out_path) / "config.json", run_config_json(rc));
      std::cout << "trained " << r.iterations << " iterations";
      if (!r.losses.empty()) std::cout << ", final loss " << r.losses.back();
      std::cout << "\n";
    } else if (*eval) {
      RunConfig rc = parse_run_config(read_config_text(config_path));
      if (!mode_override.empty()) rc.spec.mode = pipeline_mode_from_string(mode_override);
      CrossvalOptions o;
      o.k = folds > 0 ? folds : rc.eval.k;
      o.seeds = rc.eval.seeds;
      if (seed_given) o.seeds = {seed};
      o.folds = folds > 0 ? std::vector<int>{} : rc.eval.folds;
      if (quick) {
        rc.train.max_iterations = std::min<std::uint64_t>(rc.train.max_iterations, 200);
      }
      o.progress = [](const std::string& line) { std::cerr << line << "\n"; };
      const auto samples = load_samples(data_path);
      if (!export_dir.empty()) {
        o.on_trained = [&](std::uint64_t s, int fold, const Pipeline<float>& pipe, const std::vector<std::size_t>& test) {
          const fs::path dir = fs::path(export_dir) / to_string(pipe.mode()) /
                               ("seed" + std::to_string(s) + "_fold" + std::to_string(fold));
          for (std::size_t i : test) {
            char name[32];
            std::snprintf(name, sizeof name, "s%05zu.pgm", i);
            write_field(dir / name, pipe.reconstruct(samples[i].stack));
          }
        };
      }
      const Report report =
          ablation ? run_ablations(samples, rc.train, rc.spec, o) : run_crossval(samples, rc.train, rc.spec, o);
      verify_report(report);
      fs::create_directories(out_path);
      write_text(fs::path(out_path) / "report.json", report.to_json());
      write_text(fs::path(out_path) / "report.txt", report.to_table());
      if (figures) {
        std::vector<std::pair<std::string, std::vector<double>>> groups;
        for (const auto& c : report.columns) {
          std::vector<double> v;
          for (const auto& f : c.folds) v.push_back(f.psnr);
          groups.emplace_back(c.name, v);
        }
        write_ppm(fs::path(out_path) / "psnr_boxplot.ppm", boxplot(groups));
        if (!report.deltas.empty()) {
          // rows: ablations, columns: (seed, fold) pairs
          const auto& d0 = report.deltas.front().deltas;
          Field heat(static_cast<int>(report.deltas.size()), static_cast<int>(d0.size()));
          double span = 1e-9;
          for (std::size_t r = 0; r < report.deltas.size(); ++r) {
            for (std::size_t c = 0; c < d0.size(); ++c) {
              heat(static_cast<int>(r), static_cast<int>(c)) = report.deltas[r].deltas[c].psnr;
              span = std::max(span, std::abs(report.deltas[r].deltas[c].psnr));
            }
          }
          write_ppm(fs::path(out_path) / "delta_heatmap.ppm", heatmap(heat, -span, span, 16));
        }
      }
      std::cout << report.to_table();
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ShapeError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return kShape;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kData;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
