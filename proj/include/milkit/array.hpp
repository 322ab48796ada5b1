#pragma once

#include <cassert>
#include <cstdint>
#include <utility>
#include <vector>

namespace milkit {

/// Dense row-major array, 0- to 3-dimensional. The single in-memory
/// representation shared by the data pipeline, the storage format and the
/// neural blocks (which use Array<double> as matrices).
template <class T>
class Array {
 public:
  Array() = default;

  explicit Array(std::vector<std::int64_t> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<std::size_t>(numel_of(shape_)), T{});
  }

  Array(std::vector<std::int64_t> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    assert(static_cast<std::int64_t>(data_.size()) == numel_of(shape_));
  }

  static std::int64_t numel_of(const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }

  int ndim() const { return static_cast<int>(shape_.size()); }
  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::int64_t dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }

  std::int64_t rows() const { assert(ndim() == 2); return shape_[0]; }
  std::int64_t cols() const { assert(ndim() == 2); return shape_[1]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& at(std::int64_t i) {
    assert(ndim() == 1);
    return data_[static_cast<std::size_t>(i)];
  }
  T at(std::int64_t i) const {
    assert(ndim() == 1);
    return data_[static_cast<std::size_t>(i)];
  }

  T& operator()(std::int64_t i, std::int64_t j) {
    assert(ndim() == 2);
    return data_[static_cast<std::size_t>(i * shape_[1] + j)];
  }
  T operator()(std::int64_t i, std::int64_t j) const {
    assert(ndim() == 2);
    return data_[static_cast<std::size_t>(i * shape_[1] + j)];
  }

  T& operator()(std::int64_t i, std::int64_t j, std::int64_t k) {
    assert(ndim() == 3);
    return data_[static_cast<std::size_t>((i * shape_[1] + j) * shape_[2] + k)];
  }
  T operator()(std::int64_t i, std::int64_t j, std::int64_t k) const {
    assert(ndim() == 3);
    return data_[static_cast<std::size_t>((i * shape_[1] + j) * shape_[2] + k)];
  }

  /// Pointer to row i of a 2-D array (or to plane row for 3-D callers doing
  /// their own arithmetic).
  T* row(std::int64_t i) {
    assert(ndim() == 2);
    return data_.data() + i * shape_[1];
  }
  const T* row(std::int64_t i) const {
    assert(ndim() == 2);
    return data_.data() + i * shape_[1];
  }

  void fill(T v) { data_.assign(data_.size(), v); }

  bool operator==(const Array& o) const {
    return shape_ == o.shape_ && data_ == o.data_;
  }

 private:
  std::vector<std::int64_t> shape_;
  std::vector<T> data_;
};

using MatD = Array<double>;
using MatF = Array<float>;

}  // namespace milkit
