#include "polarfilm/train.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>

#include <nlohmann/json.hpp>

#include "polarfilm/blob_io.hpp"
#include "polarfilm/error.hpp"
#include "polarfilm/rng.hpp"

namespace polarfilm {

void TrainConfig::validate() const {
  auto positive = [](bool ok, const char* field) {
    if (!ok) throw ParameterError(std::string("train config: '") + field + "' must be positive");
  };
  positive(base_lr > 0.0 && std::isfinite(base_lr), "base_lr");
  positive(decay > 0.0 && decay <= 1.0, "decay");
  positive(decay_interval > 0, "decay_interval");
  positive(batch > 0, "batch");
  if (crop < 0) throw ParameterError("train config: 'crop' must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ParameterError("train config: 'beta1' must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ParameterError("train config: 'beta2' must lie in [0, 1)");
  positive(eps > 0.0, "eps");
}

double lr_at(std::uint64_t iter, const TrainConfig& cfg) {
  return cfg.base_lr * std::pow(cfg.decay, static_cast<double>(iter / cfg.decay_interval));
}

Adam::Adam(std::vector<Parameter<float>*> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (auto* p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void Adam::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter<float>& p = *params_[k];
    if (p.grad.empty()) continue;
    float* w = p.value.data();
    const float* g = p.grad.data();
    float* m = m_[k].data();
    float* v = v_[k].data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double gi = g[i];
      const double mi = beta1_ * m[i] + (1.0 - beta1_) * gi;
      const double vi = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      w[i] = static_cast<float>(w[i] - lr * (mi / c1) / (std::sqrt(vi / c2) + eps_));
    }
  }
}

OptimizerState Adam::state() const { return {t_, m_, v_}; }

void Adam::load_state(const OptimizerState& s) {
  if (s.m.empty()) {
    t_ = s.step;
    return;
  }
  if (s.m.size() != params_.size() || s.v.size() != params_.size()) {
    throw ShapeError("optimizer state does not match the parameter list");
  }
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (!s.m[k].same_shape(params_[k]->value) || !s.v[k].same_shape(params_[k]->value)) {
      throw ShapeError("optimizer moment shape mismatch for '" + params_[k]->name + "'");
    }
  }
  t_ = s.step;
  m_ = s.m;
  v_ = s.v;
}

namespace {

struct Prepared {
  PipelineInputs<float> in;
  Tensor<float> gt;
};

void copy_window(const Tensor<float>& src, Tensor<float>& dst, int b, int y0, int x0) {
  for (int c = 0; c < src.channels(); ++c) {
    for (int y = 0; y < dst.height(); ++y) {
      const float* row = src.plane(0, c) + static_cast<std::size_t>(y0 + y) * src.width() + x0;
      std::copy_n(row, dst.width(), dst.plane(b, c) + static_cast<std::size_t>(y) * dst.width());
    }
  }
}

void dump_batch(const std::filesystem::path& dir, const PipelineInputs<float>& in, const Tensor<float>& gt) {
  write_blob(dir / "captures.pftb", blob_from_tensor(in.captures, DType::F32));
  write_blob(dir / "aop_dop.pftb", blob_from_tensor(in.aop_dop, DType::F32));
  write_blob(dir / "imax.pftb", blob_from_tensor(in.imax, DType::F32));
  write_blob(dir / "imin.pftb", blob_from_tensor(in.imin, DType::F32));
  write_blob(dir / "intensity.pftb", blob_from_tensor(in.intensity, DType::F32));
  write_blob(dir / "gt.pftb", blob_from_tensor(gt, DType::F32));
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const PipelineSpec& spec, const std::vector<TrainSample>& samples,
                  const TrainHooks& hooks) {
  cfg.validate();
  if (samples.empty()) throw DataError("training needs at least one sample");
  const int h = samples.front().gt.height(), w = samples.front().gt.width();
  std::vector<Prepared> prepared;
  prepared.reserve(samples.size());
  for (const TrainSample& s : samples) {
    s.stack.validate();
    if (s.stack.height() != h || s.stack.width() != w || !s.gt.same_shape(s.stack.i0)) {
      throw ShapeError("training samples must share one image size");
    }
    const PolarStack one[] = {s.stack};
    Prepared p{make_inputs<float>(one), Tensor<float>(1, 1, h, w)};
    for (std::size_t i = 0; i < s.gt.size(); ++i) p.gt[i] = static_cast<float>(s.gt[i]);
    prepared.push_back(std::move(p));
  }
  const int ch = cfg.crop > 0 ? std::min(cfg.crop, h) : h;
  const int cw = cfg.crop > 0 ? std::min(cfg.crop, w) : w;

  TrainResult result{Pipeline<float>(spec, cfg.seed), {}, 0, {}};
  std::vector<Parameter<float>*> params;
  for (auto& [name, p] : result.pipeline.named_parameters()) params.push_back(p);
  Adam adam(params, cfg.beta1, cfg.beta2, cfg.eps);
  std::uint64_t start = 0;
  if (hooks.resume) {
    if (!(hooks.resume->spec == spec)) throw ParameterError("resume checkpoint was trained with another pipeline");
    load_parameters(*hooks.resume, result.pipeline);
    adam.load_state(hooks.resume->optimizer);
    start = hooks.resume->iteration;
  }

  const auto t0 = std::chrono::steady_clock::now();
  const int n = cfg.batch;
  for (std::uint64_t iter = start; iter < cfg.max_iterations; ++iter) {
    // every iteration draws from its own stream so resumed runs match
    Rng rng(splitmix64(cfg.seed ^ 0x7A11ULL) + iter);
    PipelineInputs<float> in{Tensor<float>(n, 4, ch, cw), Tensor<float>(n, 2, ch, cw), Tensor<float>(n, 1, ch, cw),
                             Tensor<float>(n, 1, ch, cw), Tensor<float>(n, 1, ch, cw)};
    Tensor<float> gt(n, 1, ch, cw);
    for (int b = 0; b < n; ++b) {
      const Prepared& p = prepared[rng.below(prepared.size())];
      const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(h - ch + 1)));
      const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(w - cw + 1)));
      copy_window(p.in.captures, in.captures, b, y0, x0);
      copy_window(p.in.aop_dop, in.aop_dop, b, y0, x0);
      copy_window(p.in.imax, in.imax, b, y0, x0);
      copy_window(p.in.imin, in.imin, b, y0, x0);
      copy_window(p.in.intensity, in.intensity, b, y0, x0);
      copy_window(p.gt, gt, b, y0, x0);
    }

    result.pipeline.zero_grad();
    Tape<float> tape;
    const auto out = result.pipeline.forward(tape, in);
    const Var<float> loss = ad::l1_loss(out.reconstruction, tape.constant(gt));
    const double value = loss.value()[0];
    if (!std::isfinite(value)) {
      std::string where;
      if (!hooks.dump_dir.empty()) {
        const auto dir = hooks.dump_dir / ("nonfinite_iter" + std::to_string(iter));
        dump_batch(dir, in, gt);
        where = "; batch written to " + dir.string();
      }
      throw TrainingError("non-finite loss at iteration " + std::to_string(iter) + where);
    }
    tape.backward(loss);
    const double lr = lr_at(iter, cfg);
    adam.step(lr);
    result.losses.push_back(value);
    result.iterations = iter + 1;

    if (hooks.log) {
      nlohmann::json line{{"iter", iter},
                          {"loss", value},
                          {"lr", lr},
                          {"wall_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
      if (out.angle.valid()) {
        // how far the learned angle wanders from the analytic optimum
        double drift = 0.0;
        for (float a : out.angle.value().values()) drift += std::abs(a - std::numbers::pi / 2);
        line["angle_drift"] = drift / static_cast<double>(out.angle.value().size());
      }
      *hooks.log << line.dump() << '\n';
    }
    if (hooks.on_checkpoint && cfg.checkpoint_interval > 0 && result.iterations % cfg.checkpoint_interval == 0) {
      hooks.on_checkpoint(snapshot(result.pipeline, result.iterations, cfg.seed, adam.state()));
    }
  }
  result.iterations = std::max(result.iterations, start);
  result.optimizer = adam.state();
  return result;
}

}  // namespace polarfilm
