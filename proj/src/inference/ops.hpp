#pragma once

#include "edgetag/inference/tensor.hpp"

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace edgetag::inference::detail {

struct Attribute {
  enum class Kind { i, f, s, ints, floats, tensor };
  Kind kind = Kind::i;
  std::int64_t i = 0;
  float f = 0.0f;
  std::string s;
  std::vector<std::int64_t> ints;
  std::vector<float> floats;
  std::optional<Tensor> t;
};

struct NodeDef {
  std::string op_type;
  std::string name;
  std::vector<int> inputs;   // value slots, -1 for an omitted optional input
  std::vector<int> outputs;
  std::map<std::string, Attribute> attrs;

  bool has(const std::string& key) const { return attrs.count(key) != 0; }
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  float get_float(const std::string& key, float fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::vector<std::int64_t> get_ints(const std::string& key, std::vector<std::int64_t> fallback = {}) const;
};

struct ExecContext {
  int threads = 1;
};

// Inputs are nullptr for omitted optional inputs.
using Kernel = std::function<std::vector<Tensor>(const NodeDef&, std::span<const Tensor* const>, const ExecContext&)>;

const Kernel* find_kernel(const std::string& op_type);
std::vector<std::string> kernel_names();

// Runs fn(begin, end) over [0, n) split across up to `threads` workers.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace edgetag::inference::detail
