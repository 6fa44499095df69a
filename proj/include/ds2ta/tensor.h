// Copyright 2026 The ds2ta-desk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DS2TA_TENSOR_H_
#define DS2TA_TENSOR_H_

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ds2ta/error.h"

namespace ds2ta {

inline constexpr int kMaxRank = 5;

using Shape = std::vector<std::int64_t>;

inline std::int64_t NumElements(const Shape& shape) {
  std::int64_t n = 1;
  for (const auto e : shape) n *= e;
  return n;
}

inline std::string ShapeString(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

inline void ValidateShape(const Shape& shape) {
  if (shape.size() > kMaxRank) {
    throw DimensionError("tensor rank " + std::to_string(shape.size()) +
                         " exceeds " + std::to_string(kMaxRank) + " in " +
                         ShapeString(shape));
  }
  for (const auto e : shape) {
    if (e < 1) throw DimensionError("non-positive extent in " + ShapeString(shape));
  }
}

// Dense row-major array of up to five extents. A rank-0 tensor is a scalar.
template <typename Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor() : data_(1, Real(0)) {}

  explicit Tensor(Shape shape, Real fill = Real(0)) : shape_(std::move(shape)) {
    ValidateShape(shape_);
    data_.assign(static_cast<std::size_t>(NumElements(shape_)), fill);
  }

  Tensor(Shape shape, std::vector<Real> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    ValidateShape(shape_);
    if (static_cast<std::int64_t>(data_.size()) != NumElements(shape_)) {
      throw DimensionError("data length " + std::to_string(data_.size()) +
                           " does not match shape " + ShapeString(shape_));
    }
  }

  static Tensor Scalar(Real v) { return Tensor(Shape{}, std::vector<Real>{v}); }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  std::int64_t dim(int axis) const { return shape_.at(static_cast<std::size_t>(axis)); }

  std::span<Real> data() { return data_; }
  std::span<const Real> data() const { return data_; }
  Real* raw() { return data_.data(); }
  const Real* raw() const { return data_.data(); }
  std::vector<Real>& storage() { return data_; }
  const std::vector<Real>& storage() const { return data_; }

  Real& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  Real operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  // Row-major flat offset of a full multi-index.
  std::int64_t Offset(std::initializer_list<std::int64_t> idx) const {
    std::int64_t off = 0;
    std::size_t axis = 0;
    for (const auto i : idx) off = off * shape_[axis++] + i;
    return off;
  }
  Real& at(std::initializer_list<std::int64_t> idx) { return data_[Offset(idx)]; }
  Real at(std::initializer_list<std::int64_t> idx) const { return data_[Offset(idx)]; }

  Real item() const { return data_.at(0); }

  Tensor Reshaped(Shape shape) const {
    if (NumElements(shape) != size()) {
      throw DimensionError("cannot reshape " + ShapeString(shape_) + " to " +
                           ShapeString(shape));
    }
    return Tensor(std::move(shape), data_);
  }

  void Fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

  template <typename Other>
  Tensor<Other> Cast() const {
    std::vector<Other> out(data_.begin(), data_.end());
    return Tensor<Other>(shape_, std::move(out));
  }

  bool operator==(const Tensor& o) const = default;

 private:
  Shape shape_;
  std::vector<Real> data_;
};

// Row-major strides of `shape`.
inline Shape Strides(const Shape& shape) {
  Shape strides(shape.size(), 1);
  for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i) {
    strides[i] = strides[i + 1] * shape[i + 1];
  }
  return strides;
}

}  // namespace ds2ta

#endif  // DS2TA_TENSOR_H_
