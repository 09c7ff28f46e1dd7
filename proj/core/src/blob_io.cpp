#include "polarfilm/blob_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "polarfilm/error.hpp"
#include "polarfilm/mosaic.hpp"

namespace polarfilm {

namespace {

constexpr char kBlobMagic[4] = {'P', 'F', 'T', 'B'};
constexpr std::uint32_t kMaxRank = 8;

}  // namespace

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::bytes(const void* data, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  buf_.insert(buf_.end(), p, p + n);
}

void ByteWriter::str(const std::string& s) {
  u32(static_cast<std::uint32_t>(s.size()));
  bytes(s.data(), s.size());
}

void ByteReader::need(std::size_t n) const {
  if (pos_ + n > bytes_.size()) throw FormatError("unexpected end of data");
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }
double ByteReader::f64() { return std::bit_cast<double>(u64()); }

void ByteReader::bytes(void* out, std::size_t n) {
  need(n);
  std::memcpy(out, bytes_.data() + pos_, n);
  pos_ += n;
}

std::string ByteReader::str() {
  const std::uint32_t n = u32();
  std::string s(n, '\0');
  bytes(s.data(), n);
  return s;
}

std::size_t TensorBlob::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

std::vector<std::uint8_t> encode_blob(const TensorBlob& blob) {
  if (blob.values.size() != blob.element_count()) {
    throw ShapeError("tensor blob payload does not match its dims");
  }
  ByteWriter w;
  w.bytes(kBlobMagic, 4);
  w.u32(TensorBlob::kVersion);
  w.u32(static_cast<std::uint32_t>(blob.dtype));
  w.u32(static_cast<std::uint32_t>(blob.dims.size()));
  for (auto d : blob.dims) w.u64(d);
  for (double v : blob.values) {
    if (blob.dtype == DType::F32) {
      w.f32(static_cast<float>(v));
    } else {
      w.f64(v);
    }
  }
  return std::move(w.buffer());
}

TensorBlob decode_blob(const std::vector<std::uint8_t>& bytes, std::size_t& offset) {
  ByteReader r(bytes, offset);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kBlobMagic, 4) != 0) throw FormatError("not a tensor blob (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != TensorBlob::kVersion) {
    throw FormatError("unsupported tensor blob version " + std::to_string(version));
  }
  TensorBlob blob;
  const std::uint32_t code = r.u32();
  if (code != 1 && code != 2) throw FormatError("unknown tensor blob dtype code " + std::to_string(code));
  blob.dtype = static_cast<DType>(code);
  const std::uint32_t rank = r.u32();
  if (rank > kMaxRank) throw FormatError("tensor blob rank too large");
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    blob.dims.push_back(r.u64());
    count *= static_cast<std::size_t>(blob.dims.back());
  }
  const std::size_t width = blob.dtype == DType::F32 ? 4 : 8;
  if (count > (bytes.size() - r.position()) / width) throw FormatError("tensor blob payload truncated");
  blob.values.resize(count);
  for (double& v : blob.values) v = blob.dtype == DType::F32 ? static_cast<double>(r.f32()) : r.f64();
  offset = r.position();
  return blob;
}

void write_blob(const std::filesystem::path& path, const TensorBlob& blob) {
  write_file(path, encode_blob(blob));
}

TensorBlob read_blob(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  std::size_t offset = 0;
  try {
    TensorBlob blob = decode_blob(bytes, offset);
    if (offset != bytes.size()) throw FormatError("trailing bytes after tensor blob");
    return blob;
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

TensorBlob blob_from_field(const Field& f) {
  TensorBlob b;
  b.dims = {static_cast<std::uint64_t>(f.height()), static_cast<std::uint64_t>(f.width())};
  b.values.assign(f.values().begin(), f.values().end());
  return b;
}

Field field_from_blob(const TensorBlob& blob) {
  std::vector<std::uint64_t> dims = blob.dims;
  while (dims.size() > 2 && dims.front() == 1) dims.erase(dims.begin());
  if (dims.size() != 2) throw ShapeError("expected a single-channel image blob");
  Field f(static_cast<int>(dims[0]), static_cast<int>(dims[1]));
  std::copy(blob.values.begin(), blob.values.end(), f.values().begin());
  return f;
}

TensorBlob blob_from_stack(const PolarStack& stack) {
  TensorBlob b;
  b.dims = {4, static_cast<std::uint64_t>(stack.height()), static_cast<std::uint64_t>(stack.width())};
  for (int k = 0; k < 4; ++k) {
    const auto v = stack.channel(k).values();
    b.values.insert(b.values.end(), v.begin(), v.end());
  }
  return b;
}

PolarStack stack_from_blob(const TensorBlob& blob) {
  if (blob.dims.size() != 3 || blob.dims[0] != 4) throw ShapeError("expected a (4, H, W) stack blob");
  const int h = static_cast<int>(blob.dims[1]), w = static_cast<int>(blob.dims[2]);
  PolarStack s(h, w);
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int k = 0; k < 4; ++k) {
    std::copy_n(blob.values.begin() + static_cast<std::ptrdiff_t>(k * hw), hw, s.channel(k).values().begin());
  }
  return s;
}

TensorBlob blob_from_stokes(const StokesMap& st) {
  TensorBlob b;
  b.dims = {3, static_cast<std::uint64_t>(st.height()), static_cast<std::uint64_t>(st.width())};
  for (const Field* f : {&st.s0, &st.s1, &st.s2}) b.values.insert(b.values.end(), f->values().begin(), f->values().end());
  return b;
}

StokesMap stokes_from_blob(const TensorBlob& blob) {
  if (blob.dims.size() != 3 || blob.dims[0] != 3) throw ShapeError("expected a (3, H, W) Stokes blob");
  const int h = static_cast<int>(blob.dims[1]), w = static_cast<int>(blob.dims[2]);
  StokesMap st{Field(h, w), Field(h, w), Field(h, w)};
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  Field* parts[] = {&st.s0, &st.s1, &st.s2};
  for (int k = 0; k < 3; ++k) {
    std::copy_n(blob.values.begin() + static_cast<std::ptrdiff_t>(k * hw), hw, parts[k]->values().begin());
  }
  return st;
}

template <typename S>
TensorBlob blob_from_tensor(const Tensor<S>& t, DType dtype) {
  TensorBlob b;
  b.dtype = dtype;
  for (int d : t.shape()) b.dims.push_back(static_cast<std::uint64_t>(d));
  b.values.reserve(t.size());
  for (S v : t.values()) b.values.push_back(static_cast<double>(v));
  return b;
}

template <typename S>
Tensor<S> tensor_from_blob(const TensorBlob& blob) {
  if (blob.dims.size() != 4) throw ShapeError("expected a rank-4 tensor blob");
  Tensor<S> t(static_cast<int>(blob.dims[0]), static_cast<int>(blob.dims[1]), static_cast<int>(blob.dims[2]),
              static_cast<int>(blob.dims[3]));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<S>(blob.values[i]);
  return t;
}

template TensorBlob blob_from_tensor(const Tensor<float>&, DType);
template TensorBlob blob_from_tensor(const Tensor<double>&, DType);
template Tensor<float> tensor_from_blob<float>(const TensorBlob&);
template Tensor<double> tensor_from_blob<double>(const TensorBlob&);

std::vector<std::uint8_t> encode_pgm16(const Field& f) {
  const std::string header = "P5\n" + std::to_string(f.width()) + " " + std::to_string(f.height()) + "\n65535\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + 2 * f.size());
  for (double v : f.values()) {
    const std::uint16_t code = to_sensor_code(v);
    out.push_back(static_cast<std::uint8_t>(code >> 8));
    out.push_back(static_cast<std::uint8_t>(code & 0xFF));
  }
  return out;
}

void write_pgm16(const std::filesystem::path& path, const Field& f) { write_file(path, encode_pgm16(f)); }

Field read_pgm16(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) { throw FormatError(path.string() + ": " + why); };
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&] {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) fail("malformed PGM header");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > 1 << 20) fail("PGM header value too large");
    }
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') fail("not a binary PGM (P5)");
  pos = 2;
  const long w = number(), h = number(), maxval = number();
  if (maxval != 65535) fail("expected maxval 65535, got " + std::to_string(maxval));
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) fail("malformed PGM header");
  ++pos;
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() - pos != 2 * n) fail("PGM payload size mismatch");
  Field f(static_cast<int>(h), static_cast<int>(w));
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint16_t code = static_cast<std::uint16_t>((bytes[pos + 2 * i] << 8) | bytes[pos + 2 * i + 1]);
    f[i] = from_sensor_code(code);
  }
  return f;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

std::string digest_hex(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
    h >>= 4;
  }
  return out;
}

std::string digest_hex(const std::string& text) {
  return digest_hex(std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace polarfilm
