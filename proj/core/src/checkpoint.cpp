#include "polarfilm/checkpoint.hpp"

#include <cstring>

#include "polarfilm/blob_io.hpp"
#include "polarfilm/error.hpp"

namespace polarfilm {

namespace {

constexpr char kMagic[4] = {'P', 'F', 'C', 'K'};

void put_descriptor(ByteWriter& w, const RdnDescriptor& d) {
  w.u32(static_cast<std::uint32_t>(d.blocks));
  w.u32(static_cast<std::uint32_t>(d.convs));
  w.u32(static_cast<std::uint32_t>(d.growth));
  w.u32(static_cast<std::uint32_t>(d.features));
}

RdnDescriptor get_descriptor(ByteReader& r) {
  RdnDescriptor d;
  d.blocks = static_cast<int>(r.u32());
  d.convs = static_cast<int>(r.u32());
  d.growth = static_cast<int>(r.u32());
  d.features = static_cast<int>(r.u32());
  try {
    d.validate();
  } catch (const ParameterError& e) {
    throw FormatError(std::string("checkpoint descriptor: ") + e.what());
  }
  return d;
}

void put_tensor(ByteWriter& w, const Tensor<float>& t) {
  const auto bytes = encode_blob(blob_from_tensor(t, DType::F32));
  w.bytes(bytes.data(), bytes.size());
}

Tensor<float> get_tensor(const std::vector<std::uint8_t>& bytes, ByteReader& r) {
  std::size_t offset = r.position();
  const TensorBlob blob = decode_blob(bytes, offset);
  if (blob.dtype != DType::F32) throw FormatError("checkpoint tensors must be f32");
  r.seek(offset);
  try {
    return tensor_from_blob<float>(blob);
  } catch (const ShapeError& e) {
    throw FormatError(std::string("checkpoint tensor: ") + e.what());
  }
}

}  // namespace

Checkpoint snapshot(const Pipeline<float>& pipeline, std::uint64_t iteration, std::uint64_t seed,
                    OptimizerState optimizer) {
  Checkpoint c;
  c.spec = pipeline.spec();
  c.iteration = iteration;
  c.seed = seed;
  for (const auto& [name, p] : pipeline.named_parameters()) c.parameters.push_back({name, p->value});
  c.optimizer = std::move(optimizer);
  return c;
}

void load_parameters(const Checkpoint& ckpt, Pipeline<float>& pipeline) {
  if (!(ckpt.spec == pipeline.spec())) throw ShapeError("checkpoint architecture does not match pipeline");
  auto params = pipeline.named_parameters();
  if (params.size() != ckpt.parameters.size()) throw ShapeError("checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const NamedTensor& src = ckpt.parameters[i];
    auto& [name, p] = params[i];
    if (src.name != name) throw ShapeError("checkpoint parameter '" + src.name + "' where '" + name + "' expected");
    if (!src.value.same_shape(p->value)) {
      throw ShapeError("checkpoint parameter '" + name + "' has shape " + shape_string(src.value.shape()) +
                       ", expected " + shape_string(p->value.shape()));
    }
    p->value = src.value;
  }
}

Pipeline<float> restore(const Checkpoint& ckpt) {
  Pipeline<float> pipeline(ckpt.spec, ckpt.seed);
  load_parameters(ckpt, pipeline);
  return pipeline;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  ByteWriter w;
  w.bytes(kMagic, 4);
  w.u32(Checkpoint::kVersion);
  w.str(to_string(c.spec.mode));
  put_descriptor(w, c.spec.anet);
  put_descriptor(w, c.spec.rnet);
  w.u64(c.iteration);
  w.u64(c.seed);
  w.u32(static_cast<std::uint32_t>(c.parameters.size()));
  for (const auto& p : c.parameters) {
    w.str(p.name);
    put_tensor(w, p.value);
  }
  const bool has_moments = !c.optimizer.m.empty();
  if (has_moments && (c.optimizer.m.size() != c.parameters.size() || c.optimizer.v.size() != c.parameters.size())) {
    throw StateError("optimizer state does not cover every parameter");
  }
  w.u64(c.optimizer.step);
  w.u32(has_moments ? 1 : 0);
  if (has_moments) {
    for (std::size_t i = 0; i < c.parameters.size(); ++i) {
      put_tensor(w, c.optimizer.m[i]);
      put_tensor(w, c.optimizer.v[i]);
    }
  }
  return std::move(w.buffer());
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("not a checkpoint (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != Checkpoint::kVersion) {
    throw FormatError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(Checkpoint::kVersion) + ")");
  }
  Checkpoint c;
  try {
    c.spec.mode = pipeline_mode_from_string(r.str());
  } catch (const ParameterError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  c.spec.anet = get_descriptor(r);
  c.spec.rnet = get_descriptor(r);
  c.iteration = r.u64();
  c.seed = r.u64();
  const std::uint32_t count = r.u32();
  if (count > 100000) throw FormatError("checkpoint parameter count implausible");
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor p;
    p.name = r.str();
    p.value = get_tensor(bytes, r);
    c.parameters.push_back(std::move(p));
  }
  c.optimizer.step = r.u64();
  const std::uint32_t has_moments = r.u32();
  if (has_moments > 1) throw FormatError("checkpoint optimizer flag invalid");
  if (has_moments) {
    for (std::uint32_t i = 0; i < count; ++i) {
      c.optimizer.m.push_back(get_tensor(bytes, r));
      c.optimizer.v.push_back(get_tensor(bytes, r));
    }
  }
  if (!r.at_end()) throw FormatError("trailing bytes after checkpoint");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("checkpoint '" + path.string() + "' not found");
  try {
    return decode_checkpoint(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace polarfilm
