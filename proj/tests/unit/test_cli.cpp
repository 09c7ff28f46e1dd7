#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "polarfilm/blob_io.hpp"
#include "polarfilm/crossval.hpp"
#include "polarfilm/dataset.hpp"

using namespace polarfilm;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string err;
};

const fs::path& workdir() {
  static const fs::path dir = [] {
    const fs::path p = fs::temp_directory_path() / "polarfilm_cli";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

CliRun cli(const std::string& args) {
  const fs::path err = workdir() / "stderr.txt";
  const std::string cmd = std::string("\"") + POLARFILM_CLI + "\" " + args + " >/dev/null 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(err);
  std::stringstream ss;
  ss << in.rdbuf();
  r.err = ss.str();
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

const char* kTinyRun = R"({
  "format_version": 1,
  "mode": "full",
  "anet": {"blocks": 1, "convs": 2, "growth": 4, "features": 8},
  "rnet": {"blocks": 1, "convs": 2, "growth": 4, "features": 8},
  "train": {"base_lr": 0.001, "max_iterations": 3, "crop": 16, "batch": 2, "seed": 5},
  "eval": {"k": 2, "seeds": [0]}
}
)";

// simulated dataset shared by several tests
const fs::path& dataset() {
  static const fs::path root = [] {
    const fs::path r = workdir() / "data";
    DatasetConfig cfg;
    cfg.seed = 314;
    write_dataset(r, cfg, 6);
    return r;
  }();
  return root;
}

const fs::path& checkpoint() {
  static const fs::path ckpt = [] {
    const fs::path cfg = workdir() / "tiny_run.json";
    write_text(cfg, kTinyRun);
    const fs::path out = workdir() / "trained";
    const CliRun r = cli("train --config " + q(cfg) + " --data " + q(dataset() / "manifest.json") + " --out " + q(out));
    EXPECT_EQ(r.code, 0) << r.err;
    return out / "checkpoint.pfck";
  }();
  return ckpt;
}

}  // namespace

TEST(Cli, SimulateThreeSamples) {
  const fs::path out = workdir() / "sim3";
  const CliRun r = cli("simulate --count 3 --seed 9 --out " + q(out));
  ASSERT_EQ(r.code, 0) << r.err;
  const DatasetManifest m = load_manifest(out / "manifest.json");
  EXPECT_EQ(m.samples.size(), 3u);
  EXPECT_EQ(m.config.seed, 9u);
  EXPECT_EQ(cli("verify --manifest " + q(out / "manifest.json")).code, 0);
}

TEST(Cli, MalformedConfigNamesField) {
  const fs::path cfg = workdir() / "bad_dataset.json";
  write_text(cfg, "{\n  \"format_version\": 1,\n  \"scene\": {\n    \"width\": -4\n  }\n}\n");
  const CliRun r = cli("simulate --config " + q(cfg) + " --count 1 --out " + q(workdir() / "never"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("scene.width"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("line 4"), std::string::npos) << r.err;
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("simulate --count -1 --out " + q(workdir() / "neg")).code, 2);
  EXPECT_EQ(cli("demosaic --in x.pgm --out y.pftb --method nearest").code, 2);
}

TEST(Cli, ReplayAndVerify) {
  const fs::path out = workdir() / "replayed";
  ASSERT_EQ(cli("replay --manifest " + q(dataset() / "manifest.json") + " --out " + q(out)).code, 0);
  const DatasetManifest m = load_manifest(dataset() / "manifest.json");
  for (const auto& e : m.samples) EXPECT_EQ(read_file(out / e.raw), read_file(dataset() / e.raw));
  const fs::path tampered = workdir() / "tampered";
  fs::copy(dataset(), tampered, fs::copy_options::recursive);
  Field gt = field_from_blob(read_blob(tampered / m.samples[0].gt));
  gt[5] = 0.123;
  write_blob(tampered / m.samples[0].gt, blob_from_field(gt));
  EXPECT_EQ(cli("verify --manifest " + q(tampered / "manifest.json")).code, 3);
}

TEST(Cli, DemosaicMethodsAndStokes) {
  const DatasetManifest m = load_manifest(dataset() / "manifest.json");
  const fs::path raw = dataset() / m.samples[0].raw;
  for (const char* method : {"bilinear", "edge-aware", "subsample"}) {
    const fs::path out = workdir() / (std::string("stack_") + method + ".pftb");
    const CliRun r = cli("demosaic --in " + q(raw) + " --out " + q(out) + " --method " + method);
    ASSERT_EQ(r.code, 0) << r.err;
    const TensorBlob b = read_blob(out);
    EXPECT_EQ(b.dims, (std::vector<std::uint64_t>{4, 64, 64}));
  }
  const fs::path st = workdir() / "stokes.pftb";
  ASSERT_EQ(cli("stokes --in " + q(workdir() / "stack_bilinear.pftb") + " --out " + q(st) + " --aop " +
                q(workdir() / "aop.pftb") + " --dop " + q(workdir() / "dop.pgm"))
                .code,
            0);
  EXPECT_EQ(read_blob(st).dims.front(), 3u);
  EXPECT_TRUE(fs::exists(workdir() / "dop.pgm"));
}

TEST(Cli, AnalyticPrior) {
  const DatasetManifest m = load_manifest(dataset() / "manifest.json");
  const fs::path out = workdir() / "prior.pftb";
  ASSERT_EQ(cli("prior --analytic --in " + q(dataset() / m.samples[1].stack) + " --out " + q(out)).code, 0);
  const PolarStack s = stack_from_blob(read_blob(dataset() / m.samples[1].stack));
  EXPECT_EQ(field_from_blob(read_blob(out)), analytic_prior(stokes_from_stack(s)).p);
  EXPECT_EQ(cli("prior --in " + q(dataset() / m.samples[1].stack) + " --out " + q(out)).code, 2);
}

TEST(Cli, TrainDryRun) {
  const fs::path cfg = workdir() / "dry.json";
  write_text(cfg, kTinyRun);
  const CliRun r = cli("train --dry-run --config " + q(cfg) + " --data " + q(dataset() / "manifest.json"));
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST(Cli, TrainWritesCheckpointLogAndConfig) {
  const fs::path ckpt = checkpoint();
  EXPECT_TRUE(fs::exists(ckpt));
  EXPECT_TRUE(fs::exists(ckpt.parent_path() / "train_log.jsonl"));
  EXPECT_TRUE(fs::exists(ckpt.parent_path() / "config.json"));
}

TEST(Cli, ComposedMatchesStaged) {
  const DatasetManifest m = load_manifest(dataset() / "manifest.json");
  const fs::path raw = dataset() / m.samples[2].raw;
  const fs::path d = workdir() / "staged";
  fs::create_directories(d);
  ASSERT_EQ(cli("reconstruct --in " + q(raw) + " --checkpoint " + q(checkpoint()) + " --out " + q(d / "composed.pftb"))
                .code,
            0);
  ASSERT_EQ(cli("demosaic --in " + q(raw) + " --out " + q(d / "stack.pftb")).code, 0);
  ASSERT_EQ(cli("infer --in " + q(d / "stack.pftb") + " --checkpoint " + q(checkpoint()) + " --out " +
                q(d / "angle.pftb"))
                .code,
            0);
  ASSERT_EQ(cli("prior --in " + q(d / "stack.pftb") + " --angle " + q(d / "angle.pftb") + " --out " +
                q(d / "prior.pftb"))
                .code,
            0);
  ASSERT_EQ(cli("reconstruct --in " + q(d / "stack.pftb") + " --checkpoint " + q(checkpoint()) + " --prior " +
                q(d / "prior.pftb") + " --out " + q(d / "staged.pftb"))
                .code,
            0);
  EXPECT_EQ(read_file(d / "composed.pftb"), read_file(d / "staged.pftb"));
}

TEST(Cli, CheckpointErrorsMapToExitCodes) {
  const DatasetManifest m = load_manifest(dataset() / "manifest.json");
  const std::string in = q(dataset() / m.samples[0].stack);
  const CliRun missing = cli("reconstruct --in " + in + " --out " + q(workdir() / "x.pftb"));
  EXPECT_EQ(missing.code, 2) << missing.err;
  auto bytes = read_file(checkpoint());
  bytes[4] = 7;
  write_file(workdir() / "v7.pfck", bytes);
  const CliRun version = cli("reconstruct --in " + in + " --checkpoint " + q(workdir() / "v7.pfck") + " --out " +
                          q(workdir() / "x.pftb"));
  EXPECT_EQ(version.code, 3);
  EXPECT_NE(version.err.find("version"), std::string::npos) << version.err;
  write_blob(workdir() / "small_prior.pftb", blob_from_field(Field(8, 8, 0.2)));
  const CliRun shape = cli("reconstruct --in " + in + " --checkpoint " + q(checkpoint()) + " --prior " +
                        q(workdir() / "small_prior.pftb") + " --out " + q(workdir() / "x.pftb"));
  EXPECT_EQ(shape.code, 4) << shape.err;
  EXPECT_EQ(cli("reconstruct --in " + q(workdir() / "nope.pftb") + " --checkpoint " + q(checkpoint()) + " --out " +
                q(workdir() / "x.pftb"))
                .code,
            3);
}

TEST(Cli, QuickTwoFoldEval) {
  const fs::path cfg = workdir() / "eval_run.json";
  write_text(cfg, R"({
  "format_version": 1,
  "train": {"base_lr": 0.001, "max_iterations": 5000, "crop": 32, "batch": 2},
  "eval": {"k": 10, "seeds": [0]}
}
)");
  const fs::path out = workdir() / "report";
  const auto t0 = std::chrono::steady_clock::now();
  const CliRun r = cli("eval --folds 2 --quick --figures --config " + q(cfg) + " --data " +
                    q(dataset() / "manifest.json") + " --out " + q(out));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LT(seconds, 300.0);
  const Report rep = report_from_json(read_text(out / "report.json"));
  EXPECT_EQ(rep.k, 2);
  EXPECT_EQ(rep.column("full").folds.size(), 2u);
  EXPECT_NO_THROW(verify_report(rep));
  EXPECT_TRUE(fs::exists(out / "report.txt"));
  EXPECT_TRUE(fs::exists(out / "psnr_boxplot.ppm"));
}
