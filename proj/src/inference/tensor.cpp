#include "edgetag/inference/tensor.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace edgetag::inference {

std::string to_string(DType dtype) { return dtype == DType::f32 ? "float32" : "int64"; }

std::size_t shape_numel(const std::vector<std::int64_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= static_cast<std::size_t>(d < 0 ? 0 : d);
  return n;
}

std::string shape_string(const std::vector<std::int64_t>& shape) { return fmt::format("({})", fmt::join(shape, ", ")); }

Tensor Tensor::floats(std::vector<std::int64_t> shape, std::vector<float> data) {
  Tensor t;
  t.dtype = DType::f32;
  t.shape = std::move(shape);
  t.f32 = std::move(data);
  return t;
}

Tensor Tensor::ints(std::vector<std::int64_t> shape, std::vector<std::int64_t> data) {
  Tensor t;
  t.dtype = DType::i64;
  t.shape = std::move(shape);
  t.i64 = std::move(data);
  return t;
}

Tensor Tensor::zeros(std::vector<std::int64_t> shape) {
  const std::size_t n = shape_numel(shape);
  return floats(std::move(shape), std::vector<float>(n, 0.0f));
}

std::size_t Tensor::numel() const { return shape_numel(shape); }

std::string Tensor::shape_string() const { return inference::shape_string(shape); }

}  // namespace edgetag::inference
