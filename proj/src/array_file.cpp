#include "milkit/array_file.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "milkit/errors.hpp"

namespace milkit {

namespace {

constexpr char kMagic[4] = {'M', 'I', 'L', 'T'};
constexpr std::uint8_t kVersion = 1;

void put_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64_le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

template <class T>
void append_le(std::vector<std::uint8_t>& out, T v) {
  static_assert(std::endian::native == std::endian::little,
                "big-endian hosts need byte swaps here");
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

template <class T>
Dtype dtype_of();
template <>
Dtype dtype_of<float>() { return Dtype::f32; }
template <>
Dtype dtype_of<std::int64_t>() { return Dtype::i64; }
template <>
Dtype dtype_of<std::uint8_t>() { return Dtype::u8; }
template <>
Dtype dtype_of<double>() { return Dtype::f64; }

template <class T>
void write_impl(const Array<T>& a, const std::filesystem::path& path) {
  for (auto d : a.shape()) {
    if (d < 0) throw Error("negative dimension in array shape");
  }
  std::vector<std::uint8_t> buf;
  buf.reserve(8 + 8 * a.shape().size() + sizeof(T) * a.vec().size());
  buf.insert(buf.end(), kMagic, kMagic + 4);
  buf.push_back(kVersion);
  buf.push_back(static_cast<std::uint8_t>(dtype_of<T>()));
  buf.push_back(static_cast<std::uint8_t>(a.ndim()));
  for (auto d : a.shape()) put_u64_le(buf, static_cast<std::uint64_t>(d));
  for (const T& v : a.vec()) append_le(buf, v);

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open for writing: " + path.string());
  os.write(reinterpret_cast<const char*>(buf.data()),
           static_cast<std::streamsize>(buf.size()));
  if (!os) throw Error("write failed: " + path.string());
}

struct Header {
  Dtype dtype;
  std::vector<std::int64_t> shape;
  std::size_t payload_offset;
};

Header read_header(const std::vector<std::uint8_t>& buf, const std::string& name) {
  if (buf.size() < 7 || std::memcmp(buf.data(), kMagic, 4) != 0)
    throw Error("unrecognized array file: " + name);
  if (buf[4] != kVersion) throw Error("unrecognized array file: " + name);
  const std::uint8_t dt = buf[5];
  if (dt < 1 || dt > 4) throw Error("unrecognized array file: " + name);
  const std::size_t ndim = buf[6];
  if (buf.size() < 7 + 8 * ndim) throw Error("corrupt array file: " + name);
  Header h;
  h.dtype = static_cast<Dtype>(dt);
  h.shape.resize(ndim);
  for (std::size_t i = 0; i < ndim; ++i)
    h.shape[i] = static_cast<std::int64_t>(get_u64_le(buf.data() + 7 + 8 * i));
  h.payload_offset = 7 + 8 * ndim;
  return h;
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  if (!is) throw Error("cannot open: " + path.string());
  const std::streamsize size = is.tellg();
  is.seekg(0);
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(size));
  if (size > 0) is.read(reinterpret_cast<char*>(buf.data()), size);
  if (!is) throw Error("cannot read: " + path.string());
  return buf;
}

template <class T>
Array<T> read_impl(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> buf = slurp(path);
  const Header h = read_header(buf, path.string());
  if (h.dtype != dtype_of<T>())
    throw Error("unrecognized array file: " + path.string() +
                " (unexpected dtype)");
  const std::int64_t numel = Array<T>::numel_of(h.shape);
  const std::size_t expect = h.payload_offset + sizeof(T) * static_cast<std::size_t>(numel);
  if (buf.size() != expect) throw Error("corrupt array file: " + path.string());
  std::vector<T> data(static_cast<std::size_t>(numel));
  if (numel > 0)
    std::memcpy(data.data(), buf.data() + h.payload_offset,
                sizeof(T) * static_cast<std::size_t>(numel));
  return Array<T>(h.shape, std::move(data));
}

}  // namespace

std::size_t dtype_size(Dtype d) {
  switch (d) {
    case Dtype::f32: return 4;
    case Dtype::i64: return 8;
    case Dtype::u8: return 1;
    case Dtype::f64: return 8;
  }
  throw Error("unrecognized array file: bad dtype");
}

void write_array(const Array<float>& a, const std::filesystem::path& path) { write_impl(a, path); }
void write_array(const Array<std::int64_t>& a, const std::filesystem::path& path) { write_impl(a, path); }
void write_array(const Array<std::uint8_t>& a, const std::filesystem::path& path) { write_impl(a, path); }
void write_array(const Array<double>& a, const std::filesystem::path& path) { write_impl(a, path); }

Dtype peek_dtype(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open: " + path.string());
  std::uint8_t head[7];
  is.read(reinterpret_cast<char*>(head), 7);
  if (!is || std::memcmp(head, kMagic, 4) != 0 || head[4] != kVersion)
    throw Error("unrecognized array file: " + path.string());
  if (head[5] < 1 || head[5] > 4)
    throw Error("unrecognized array file: " + path.string());
  return static_cast<Dtype>(head[5]);
}

Array<float> read_array_f32(const std::filesystem::path& path) { return read_impl<float>(path); }
Array<std::int64_t> read_array_i64(const std::filesystem::path& path) { return read_impl<std::int64_t>(path); }
Array<std::uint8_t> read_array_u8(const std::filesystem::path& path) { return read_impl<std::uint8_t>(path); }
Array<double> read_array_f64(const std::filesystem::path& path) { return read_impl<double>(path); }

}  // namespace milkit
