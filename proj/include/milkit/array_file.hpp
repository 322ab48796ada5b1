#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "milkit/array.hpp"

namespace milkit {

/// Self-describing binary array container (".milt").
///
/// Layout, all little-endian:
///   magic   4 bytes  "MILT"
///   version 1 byte   (= 1)
///   dtype   1 byte   1 = float32, 2 = int64, 3 = uint8 (bool), 4 = float64
///   ndim    1 byte
///   shape   ndim x uint64
///   payload row-major element data
///
/// Dataset files use dtypes 1-3 only; dtype 4 exists for checkpoints, where
/// parameters must round-trip at full precision.
enum class Dtype : std::uint8_t {
  f32 = 1,
  i64 = 2,
  u8 = 3,
  f64 = 4,
};

std::size_t dtype_size(Dtype d);

void write_array(const Array<float>& a, const std::filesystem::path& path);
void write_array(const Array<std::int64_t>& a, const std::filesystem::path& path);
void write_array(const Array<std::uint8_t>& a, const std::filesystem::path& path);
void write_array(const Array<double>& a, const std::filesystem::path& path);

/// Dtype of the file at `path` without reading the payload.
Dtype peek_dtype(const std::filesystem::path& path);

Array<float> read_array_f32(const std::filesystem::path& path);
Array<std::int64_t> read_array_i64(const std::filesystem::path& path);
Array<std::uint8_t> read_array_u8(const std::filesystem::path& path);
Array<double> read_array_f64(const std::filesystem::path& path);

}  // namespace milkit
