#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "polarfilm/field.hpp"
#include "polarfilm/polar.hpp"
#include "polarfilm/tensor.hpp"

namespace polarfilm {

enum class DType : std::uint32_t { F32 = 1, F64 = 2 };

/// In-memory form of the "PFTB" tensor container: header (magic, version,
/// dtype code, rank, dims) then a little-endian IEEE-754 row-major payload.
struct TensorBlob {
  static constexpr std::uint32_t kVersion = 1;

  DType dtype = DType::F64;
  std::vector<std::uint64_t> dims;
  /// Values widened to double; F32 blobs hold exactly representable floats.
  std::vector<double> values;

  std::size_t element_count() const;
  bool operator==(const TensorBlob&) const = default;
};

std::vector<std::uint8_t> encode_blob(const TensorBlob& blob);
/// Parses one blob starting at `offset`, advancing it. Throws FormatError.
TensorBlob decode_blob(const std::vector<std::uint8_t>& bytes, std::size_t& offset);

void write_blob(const std::filesystem::path& path, const TensorBlob& blob);
TensorBlob read_blob(const std::filesystem::path& path);

TensorBlob blob_from_field(const Field& f);
Field field_from_blob(const TensorBlob& blob);
/// (4, H, W) blob of a stack, channels in 0/45/90/135 order.
TensorBlob blob_from_stack(const PolarStack& stack);
PolarStack stack_from_blob(const TensorBlob& blob);
/// (3, H, W) blob of s0, s1, s2.
TensorBlob blob_from_stokes(const StokesMap& st);
StokesMap stokes_from_blob(const TensorBlob& blob);
template <typename S>
TensorBlob blob_from_tensor(const Tensor<S>& t, DType dtype);
template <typename S>
Tensor<S> tensor_from_blob(const TensorBlob& blob);

/// Binary PGM (P5), maxval 65535, big-endian samples.
void write_pgm16(const std::filesystem::path& path, const Field& f);
Field read_pgm16(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_pgm16(const Field& f);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// FNV-1a 64-bit digest rendered as 16 hex digits.
std::string digest_hex(const std::vector<std::uint8_t>& bytes);
std::string digest_hex(const std::string& text);

/// Little-endian primitives shared by the binary formats.
class ByteWriter {
 public:
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f64(double v);
  void bytes(const void* data, std::size_t n);
  void str(const std::string& s);
  std::vector<std::uint8_t>& buffer() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& bytes, std::size_t offset = 0) : bytes_(bytes), pos_(offset) {}
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  void bytes(void* out, std::size_t n);
  std::string str();
  std::size_t position() const { return pos_; }
  void seek(std::size_t pos) { pos_ = pos; }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const;
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_;
};

}  // namespace polarfilm
