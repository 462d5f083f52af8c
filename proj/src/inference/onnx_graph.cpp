#include "edgetag/inference/onnx_graph.hpp"

#include "edgetag/error.hpp"
#include "ops.hpp"
#include "onnx/onnx.pb.h"

#include <fmt/format.h>
#include <google/protobuf/io/coded_stream.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace edgetag::inference {

namespace {

using detail::Attribute;
using detail::NodeDef;

[[noreturn]] void invalid(const std::string& graph, const std::string& message) {
  throw Error(Errc::graph_invalid, fmt::format("{}: {}", graph, message));
}

template <typename Dst, typename Src>
void append_raw(std::vector<Dst>& out, const std::string& raw, std::size_t n) {
  const std::size_t offset = out.size();
  out.resize(offset + n);
  for (std::size_t i = 0; i < n; ++i) {
    Src v;
    std::memcpy(&v, raw.data() + i * sizeof(Src), sizeof(Src));
    out[offset + i] = static_cast<Dst>(v);
  }
}

Tensor convert_tensor(const onnx::TensorProto& proto, const std::string& graph) {
  if (proto.data_location() == onnx::TensorProto::EXTERNAL)
    invalid(graph, fmt::format("tensor '{}' uses external data, which is not supported", proto.name()));
  Tensor t;
  for (auto d : proto.dims()) {
    if (d < 0) invalid(graph, fmt::format("tensor '{}' has a negative dim", proto.name()));
    t.shape.push_back(d);
  }
  const std::size_t n = t.numel();
  const std::string& raw = proto.raw_data();
  auto check_count = [&](std::size_t got) {
    if (got != n)
      invalid(graph, fmt::format("tensor '{}' holds {} values for shape {}", proto.name(), got, t.shape_string()));
  };
  switch (proto.data_type()) {
    case onnx::TensorProto::FLOAT:
      t.dtype = DType::f32;
      if (!raw.empty()) {
        check_count(raw.size() / sizeof(float));
        append_raw<float, float>(t.f32, raw, n);
      } else {
        t.f32.assign(proto.float_data().begin(), proto.float_data().end());
        check_count(t.f32.size());
      }
      break;
    case onnx::TensorProto::DOUBLE:
      t.dtype = DType::f32;
      if (!raw.empty()) {
        check_count(raw.size() / sizeof(double));
        append_raw<float, double>(t.f32, raw, n);
      } else {
        for (double v : proto.double_data()) t.f32.push_back(static_cast<float>(v));
        check_count(t.f32.size());
      }
      break;
    case onnx::TensorProto::INT64:
      t.dtype = DType::i64;
      if (!raw.empty()) {
        check_count(raw.size() / sizeof(std::int64_t));
        append_raw<std::int64_t, std::int64_t>(t.i64, raw, n);
      } else {
        t.i64.assign(proto.int64_data().begin(), proto.int64_data().end());
        check_count(t.i64.size());
      }
      break;
    case onnx::TensorProto::INT32:
      t.dtype = DType::i64;
      if (!raw.empty()) {
        check_count(raw.size() / sizeof(std::int32_t));
        append_raw<std::int64_t, std::int32_t>(t.i64, raw, n);
      } else {
        for (auto v : proto.int32_data()) t.i64.push_back(v);
        check_count(t.i64.size());
      }
      break;
    default:
      invalid(graph, fmt::format("tensor '{}' has unsupported element type {}", proto.name(), proto.data_type()));
  }
  return t;
}

ValueInfo convert_value_info(const onnx::ValueInfoProto& proto, const std::string& graph) {
  ValueInfo info;
  info.name = proto.name();
  if (!proto.type().has_tensor_type()) invalid(graph, fmt::format("value '{}' is not a tensor", proto.name()));
  const auto& tt = proto.type().tensor_type();
  switch (tt.elem_type()) {
    case onnx::TensorProto::FLOAT:
      info.dtype = DType::f32;
      break;
    case onnx::TensorProto::INT64:
      info.dtype = DType::i64;
      break;
    default:
      invalid(graph, fmt::format("value '{}' has unsupported element type {}", proto.name(), tt.elem_type()));
  }
  if (tt.has_shape())
    for (const auto& dim : tt.shape().dim()) info.shape.push_back(dim.has_dim_value() ? dim.dim_value() : -1);
  return info;
}

Attribute convert_attribute(const onnx::AttributeProto& proto, const std::string& graph) {
  Attribute a;
  switch (proto.type()) {
    case onnx::AttributeProto::INT:
      a.kind = Attribute::Kind::i;
      a.i = proto.i();
      a.f = static_cast<float>(proto.i());
      break;
    case onnx::AttributeProto::FLOAT:
      a.kind = Attribute::Kind::f;
      a.f = proto.f();
      break;
    case onnx::AttributeProto::STRING:
      a.kind = Attribute::Kind::s;
      a.s = proto.s();
      break;
    case onnx::AttributeProto::INTS:
      a.kind = Attribute::Kind::ints;
      a.ints.assign(proto.ints().begin(), proto.ints().end());
      break;
    case onnx::AttributeProto::FLOATS:
      a.kind = Attribute::Kind::floats;
      a.floats.assign(proto.floats().begin(), proto.floats().end());
      break;
    case onnx::AttributeProto::TENSOR:
      a.kind = Attribute::Kind::tensor;
      a.t = convert_tensor(proto.t(), graph);
      break;
    default:
      invalid(graph, fmt::format("attribute '{}' has unsupported type {}", proto.name(), static_cast<int>(proto.type())));
  }
  return a;
}

}  // namespace

std::int64_t ValueInfo::static_numel() const {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d < 0) return -1;
    n *= d;
  }
  return n;
}

struct OnnxGraph::Impl {
  std::string name;
  std::int64_t opset = 0;
  int threads = 1;
  std::vector<ValueInfo> inputs;
  std::vector<ValueInfo> outputs;
  std::vector<int> input_slots;
  std::vector<int> output_slots;
  std::vector<std::string> output_producers;
  std::vector<NodeDef> nodes;
  std::size_t slot_count = 0;
  std::unordered_map<int, Tensor> initializers;  // slot -> value
  // per node, the slots whose last consumer it is (freed after it runs)
  std::vector<std::vector<int>> release_after;
};

OnnxGraph::OnnxGraph(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
OnnxGraph::OnnxGraph(OnnxGraph&&) noexcept = default;
OnnxGraph& OnnxGraph::operator=(OnnxGraph&&) noexcept = default;
OnnxGraph::~OnnxGraph() = default;

OnnxGraph OnnxGraph::load(const std::filesystem::path& path, int intra_op_threads) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::file_missing, fmt::format("model file not found: {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.filename().string(), intra_op_threads);
}

OnnxGraph OnnxGraph::parse(const std::string& bytes, const std::string& name, int intra_op_threads) {
  onnx::ModelProto model;
  {
    google::protobuf::io::CodedInputStream stream(reinterpret_cast<const std::uint8_t*>(bytes.data()),
                                                  static_cast<int>(bytes.size()));
    stream.SetTotalBytesLimit(std::numeric_limits<int>::max());
    if (!model.ParseFromCodedStream(&stream) || !stream.ConsumedEntireMessage())
      invalid(name, "not a parseable ONNX model");
  }
  if (!model.has_graph()) invalid(name, "model has no graph");

  auto impl = std::make_unique<Impl>();
  impl->name = name;
  impl->threads = std::max(1, intra_op_threads);
  for (const auto& op : model.opset_import())
    if (op.domain().empty() || op.domain() == "ai.onnx") impl->opset = op.version();
  if (impl->opset < 13) invalid(name, fmt::format("opset {} is below the supported minimum 13", impl->opset));

  const auto& g = model.graph();
  std::unordered_map<std::string, int> slots;
  auto slot_of = [&](const std::string& value) {
    const auto [it, inserted] = slots.emplace(value, static_cast<int>(slots.size()));
    return it->second;
  };
  std::unordered_map<int, bool> available;
  for (const auto& init : g.initializer()) {
    const int s = slot_of(init.name());
    impl->initializers.emplace(s, convert_tensor(init, name));
    available[s] = true;
  }
  for (const auto& vi : g.input()) {
    if (impl->initializers.count(slot_of(vi.name()))) continue;  // older IRs list initializers as inputs
    impl->inputs.push_back(convert_value_info(vi, name));
    impl->input_slots.push_back(slot_of(vi.name()));
    available[impl->input_slots.back()] = true;
  }
  if (impl->inputs.empty()) invalid(name, "graph has no inputs");

  std::unordered_map<int, std::string> producer;
  for (const auto& np : g.node()) {
    if (!np.domain().empty() && np.domain() != "ai.onnx")
      invalid(name, fmt::format("node '{}' uses unsupported domain '{}'", np.name(), np.domain()));
    if (detail::find_kernel(np.op_type()) == nullptr)
      invalid(name, fmt::format("operator {} is not supported", np.op_type()));
    NodeDef node;
    node.op_type = np.op_type();
    node.name = np.name();
    for (const auto& input : np.input()) {
      if (input.empty()) {
        node.inputs.push_back(-1);
        continue;
      }
      const int s = slot_of(input);
      if (!available.count(s))
        invalid(name, fmt::format("node '{}' ({}) reads '{}' before it is produced", np.name(), np.op_type(), input));
      node.inputs.push_back(s);
    }
    for (const auto& output : np.output()) {
      const int s = slot_of(output);
      if (available.count(s)) invalid(name, fmt::format("value '{}' is produced twice", output));
      available[s] = true;
      producer[s] = np.op_type();
      node.outputs.push_back(s);
    }
    for (const auto& attr : np.attribute()) node.attrs.emplace(attr.name(), convert_attribute(attr, name));
    impl->nodes.push_back(std::move(node));
  }
  for (const auto& vi : g.output()) {
    const int s = slot_of(vi.name());
    if (!available.count(s)) invalid(name, fmt::format("output '{}' is never produced", vi.name()));
    impl->outputs.push_back(convert_value_info(vi, name));
    impl->output_slots.push_back(s);
    impl->output_producers.push_back(producer.count(s) ? producer[s] : "");
  }
  if (impl->outputs.empty()) invalid(name, "graph has no outputs");
  impl->slot_count = slots.size();

  std::vector<int> last_use(impl->slot_count, -1);
  for (std::size_t i = 0; i < impl->nodes.size(); ++i)
    for (int s : impl->nodes[i].inputs)
      if (s >= 0) last_use[static_cast<std::size_t>(s)] = static_cast<int>(i);
  for (int s : impl->output_slots) last_use[static_cast<std::size_t>(s)] = -1;
  impl->release_after.resize(impl->nodes.size());
  for (std::size_t s = 0; s < last_use.size(); ++s)
    if (last_use[s] >= 0 && !impl->initializers.count(static_cast<int>(s)))
      impl->release_after[static_cast<std::size_t>(last_use[s])].push_back(static_cast<int>(s));

  return OnnxGraph(std::move(impl));
}

const std::string& OnnxGraph::name() const { return impl_->name; }
std::int64_t OnnxGraph::opset() const { return impl_->opset; }
const std::vector<ValueInfo>& OnnxGraph::inputs() const { return impl_->inputs; }
const std::vector<ValueInfo>& OnnxGraph::outputs() const { return impl_->outputs; }
std::size_t OnnxGraph::node_count() const { return impl_->nodes.size(); }
int OnnxGraph::intra_op_threads() const { return impl_->threads; }

std::string OnnxGraph::output_producer(std::size_t i) const {
  return i < impl_->output_producers.size() ? impl_->output_producers[i] : "";
}

std::vector<Tensor> OnnxGraph::run(Tensor input) const {
  if (impl_->inputs.size() != 1)
    throw Error(Errc::shape_mismatch, fmt::format("{}: graph takes {} inputs", impl_->name, impl_->inputs.size()));
  return run({{impl_->inputs[0].name, std::move(input)}});
}

std::vector<Tensor> OnnxGraph::run(const std::vector<std::pair<std::string, Tensor>>& feeds) const {
  const Impl& g = *impl_;
  std::vector<Tensor> owned(g.slot_count);
  std::vector<const Tensor*> values(g.slot_count, nullptr);
  for (const auto& [slot, tensor] : g.initializers) values[static_cast<std::size_t>(slot)] = &tensor;

  for (std::size_t i = 0; i < g.inputs.size(); ++i) {
    const ValueInfo& info = g.inputs[i];
    const auto it = std::find_if(feeds.begin(), feeds.end(), [&](const auto& f) { return f.first == info.name; });
    if (it == feeds.end()) throw Error(Errc::shape_mismatch, fmt::format("{}: input '{}' not fed", g.name, info.name));
    const Tensor& t = it->second;
    bool ok = t.dtype == info.dtype && (info.shape.empty() || t.rank() == info.shape.size());
    for (std::size_t d = 0; ok && d < info.shape.size(); ++d) ok = info.shape[d] < 0 || info.shape[d] == t.shape[d];
    if (!ok || t.numel() != (t.dtype == DType::f32 ? t.f32.size() : t.i64.size()))
      throw Error(Errc::shape_mismatch,
                  fmt::format("{}: input '{}' expects {} {}, got {} {}", g.name, info.name, to_string(info.dtype),
                              shape_string(info.shape), to_string(t.dtype), t.shape_string()));
    values[static_cast<std::size_t>(g.input_slots[i])] = &t;
  }

  const detail::ExecContext ctx{g.threads};
  std::vector<const Tensor*> args;
  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    const NodeDef& node = g.nodes[n];
    args.clear();
    for (int s : node.inputs) args.push_back(s < 0 ? nullptr : values[static_cast<std::size_t>(s)]);
    std::vector<Tensor> results;
    try {
      results = (*detail::find_kernel(node.op_type))(node, args, ctx);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(Errc::backend_failure, fmt::format("{}: {} '{}': {}", g.name, node.op_type, node.name, e.what()));
    }
    if (results.size() < node.outputs.size())
      throw Error(Errc::backend_failure, fmt::format("{}: {} produced too few outputs", g.name, node.op_type));
    for (std::size_t o = 0; o < node.outputs.size(); ++o) {
      const auto s = static_cast<std::size_t>(node.outputs[o]);
      owned[s] = std::move(results[o]);
      values[s] = &owned[s];
    }
    for (int s : g.release_after[n]) {
      owned[static_cast<std::size_t>(s)] = Tensor{};
      values[static_cast<std::size_t>(s)] = nullptr;
    }
  }

  std::vector<Tensor> outputs;
  for (int s : g.output_slots) outputs.push_back(*values[static_cast<std::size_t>(s)]);
  return outputs;
}

std::vector<std::string> supported_operators() { return detail::kernel_names(); }

}  // namespace edgetag::inference
