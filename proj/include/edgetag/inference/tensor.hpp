#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace edgetag::inference {

enum class DType { f32, i64 };

std::string to_string(DType dtype);

/// Dense row-major tensor. Exactly one of `f32` / `i64` holds the data,
/// selected by `dtype`.
struct Tensor {
  DType dtype = DType::f32;
  std::vector<std::int64_t> shape;
  std::vector<float> f32;
  std::vector<std::int64_t> i64;

  static Tensor floats(std::vector<std::int64_t> shape, std::vector<float> data);
  static Tensor ints(std::vector<std::int64_t> shape, std::vector<std::int64_t> data);
  static Tensor zeros(std::vector<std::int64_t> shape);

  std::size_t numel() const;
  std::size_t rank() const { return shape.size(); }
  std::string shape_string() const;
};

std::size_t shape_numel(const std::vector<std::int64_t>& shape);
std::string shape_string(const std::vector<std::int64_t>& shape);

}  // namespace edgetag::inference
