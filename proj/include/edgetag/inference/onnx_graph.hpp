#pragma once

#include "edgetag/inference/tensor.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace edgetag::inference {

/// Declared graph input/output. Symbolic or missing dims are -1.
struct ValueInfo {
  std::string name;
  DType dtype = DType::f32;
  std::vector<std::int64_t> shape;

  // Product of the dims, or -1 when any dim is symbolic.
  std::int64_t static_numel() const;
};

/// In-tree interpreter for ONNX graphs (default domain, opset >= 13,
/// float32 and int64 tensors). Loading validates every node against the
/// operator registry; run() is const and may be called from one thread at a
/// time per graph instance.
class OnnxGraph {
 public:
  // Throws Error(Errc::file_missing) or Error(Errc::graph_invalid).
  static OnnxGraph load(const std::filesystem::path& path, int intra_op_threads = 1);
  static OnnxGraph parse(const std::string& bytes, const std::string& name, int intra_op_threads = 1);

  OnnxGraph(OnnxGraph&&) noexcept;
  OnnxGraph& operator=(OnnxGraph&&) noexcept;
  ~OnnxGraph();

  const std::string& name() const;
  std::int64_t opset() const;
  const std::vector<ValueInfo>& inputs() const;
  const std::vector<ValueInfo>& outputs() const;
  std::size_t node_count() const;
  // op_type of the node producing output `i` ("" when it is an initializer
  // or a graph input passed through).
  std::string output_producer(std::size_t i = 0) const;

  // Feeds are matched by name; shapes must agree with static dims
  // (Errc::shape_mismatch). Kernel failures raise Errc::backend_failure.
  std::vector<Tensor> run(const std::vector<std::pair<std::string, Tensor>>& feeds) const;
  // Single-input convenience.
  std::vector<Tensor> run(Tensor input) const;

  int intra_op_threads() const;

 private:
  struct Impl;
  explicit OnnxGraph(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

// Operator types the interpreter implements, sorted.
std::vector<std::string> supported_operators();

}  // namespace edgetag::inference
