#include "ops.hpp"

#include "edgetag/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>
#include <unordered_map>

namespace edgetag::inference::detail {

namespace {

using Shape = std::vector<std::int64_t>;
using Inputs = std::span<const Tensor* const>;

[[noreturn]] void fail(const NodeDef& node, const std::string& message) {
  throw Error(Errc::backend_failure, fmt::format("{} '{}': {}", node.op_type, node.name, message));
}

const Tensor& need(const NodeDef& node, Inputs in, std::size_t i) {
  if (i >= in.size() || in[i] == nullptr) fail(node, fmt::format("missing input {}", i));
  return *in[i];
}

const Tensor* optional_input(Inputs in, std::size_t i) { return i < in.size() ? in[i] : nullptr; }

const Tensor& need_f32(const NodeDef& node, Inputs in, std::size_t i) {
  const auto& t = need(node, in, i);
  if (t.dtype != DType::f32) fail(node, fmt::format("input {} must be float32", i));
  return t;
}

std::vector<std::int64_t> as_ints(const NodeDef& node, const Tensor& t) {
  if (t.dtype != DType::i64) fail(node, "expected an int64 tensor");
  return t.i64;
}

std::int64_t normalize_axis(const NodeDef& node, std::int64_t axis, std::size_t rank) {
  const auto r = static_cast<std::int64_t>(rank);
  if (axis < -r || axis >= r) fail(node, fmt::format("axis {} out of range for rank {}", axis, rank));
  return axis < 0 ? axis + r : axis;
}

Shape strides_of(const Shape& shape) {
  Shape strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) strides[i - 1] = strides[i] * shape[i];
  return strides;
}

// ---------------------------------------------------------------- broadcast

Shape broadcast_shape(const NodeDef& node, const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::int64_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::int64_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1)
      fail(node, fmt::format("cannot broadcast {} with {}", shape_string(a), shape_string(b)));
    out[i] = da == 1 ? db : da;
  }
  return out;
}

// Strides of `in` laid over `out` (0 on broadcast dims).
Shape broadcast_strides(const Shape& in, const Shape& out) {
  Shape strides(out.size(), 0);
  const Shape own = strides_of(in);
  const std::size_t lead = out.size() - in.size();
  for (std::size_t i = 0; i < in.size(); ++i) strides[lead + i] = in[i] == 1 ? 0 : own[i];
  return strides;
}

template <typename T, typename F>
std::vector<T> binary_map(const std::vector<T>& a, const Shape& sa, const std::vector<T>& b, const Shape& sb,
                          const Shape& out, F fn) {
  const std::size_t n = shape_numel(out);
  std::vector<T> result(n);
  if (sa == sb) {
    for (std::size_t i = 0; i < n; ++i) result[i] = fn(a[i], b[i]);
    return result;
  }
  if (b.size() == 1 && a.size() == n) {
    const T y = b[0];
    for (std::size_t i = 0; i < n; ++i) result[i] = fn(a[i], y);
    return result;
  }
  if (a.size() == 1 && b.size() == n) {
    const T x = a[0];
    for (std::size_t i = 0; i < n; ++i) result[i] = fn(x, b[i]);
    return result;
  }
  const Shape ta = broadcast_strides(sa, out);
  const Shape tb = broadcast_strides(sb, out);
  const std::size_t rank = out.size();
  if (rank == 0) {
    result[0] = fn(a[0], b[0]);
    return result;
  }
  // iterate the innermost dim in a tight loop
  const std::int64_t inner = out[rank - 1];
  const std::int64_t ia = ta[rank - 1], ib = tb[rank - 1];
  Shape idx(rank, 0);
  std::int64_t oa = 0, ob = 0;
  for (std::size_t pos = 0; pos < n; pos += static_cast<std::size_t>(inner)) {
    for (std::int64_t j = 0; j < inner; ++j) result[pos + j] = fn(a[oa + j * ia], b[ob + j * ib]);
    for (std::size_t d = rank - 1; d-- > 0;) {
      ++idx[d];
      oa += ta[d];
      ob += tb[d];
      if (idx[d] < out[d]) break;
      oa -= ta[d] * out[d];
      ob -= tb[d] * out[d];
      idx[d] = 0;
    }
  }
  return result;
}

template <typename FF, typename FI>
Kernel binary_kernel(FF ff, FI fi) {
  return [ff, fi](const NodeDef& node, Inputs in, const ExecContext&) {
    const Tensor& a = need(node, in, 0);
    const Tensor& b = need(node, in, 1);
    if (a.dtype != b.dtype) fail(node, "operand types differ");
    const Shape out = broadcast_shape(node, a.shape, b.shape);
    Tensor r;
    r.dtype = a.dtype;
    r.shape = out;
    if (shape_numel(out) == 0) return std::vector<Tensor>{std::move(r)};
    if (a.dtype == DType::f32)
      r.f32 = binary_map(a.f32, a.shape, b.f32, b.shape, out, ff);
    else
      r.i64 = binary_map(a.i64, a.shape, b.i64, b.shape, out, fi);
    return std::vector<Tensor>{std::move(r)};
  };
}

template <typename F>
Kernel unary_kernel(F fn) {
  return [fn](const NodeDef& node, Inputs in, const ExecContext&) {
    Tensor r = need_f32(node, in, 0);
    for (auto& v : r.f32) v = fn(v);
    return std::vector<Tensor>{std::move(r)};
  };
}

// ---------------------------------------------------------------- matmul

// out[m, n] = sum_k a[m, k] * b[k, n] for row-major blocks.
void gemm_block(const float* a, const float* b, float* out, std::int64_t m, std::int64_t k, std::int64_t n,
                std::int64_t a_row_stride, std::int64_t a_col_stride, std::int64_t b_row_stride,
                std::int64_t b_col_stride, int threads) {
  parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      float* row = out + i * n;
      std::fill(row, row + n, 0.0f);
      for (std::int64_t p = 0; p < k; ++p) {
        const float av = a[static_cast<std::int64_t>(i) * a_row_stride + p * a_col_stride];
        const float* brow = b + p * b_row_stride;
        if (b_col_stride == 1) {
          for (std::int64_t j = 0; j < n; ++j) row[j] += av * brow[j];
        } else {
          for (std::int64_t j = 0; j < n; ++j) row[j] += av * brow[j * b_col_stride];
        }
      }
    }
  });
}

std::vector<Tensor> matmul(const NodeDef& node, Inputs in, const ExecContext& ctx) {
  const Tensor& a = need_f32(node, in, 0);
  const Tensor& b = need_f32(node, in, 1);
  if (a.rank() == 0 || b.rank() == 0) fail(node, "scalar operand");
  Shape sa = a.shape, sb = b.shape;
  const bool a_vec = sa.size() == 1, b_vec = sb.size() == 1;
  if (a_vec) sa.insert(sa.begin(), 1);
  if (b_vec) sb.push_back(1);
  const std::int64_t m = sa[sa.size() - 2], k = sa.back(), n = sb.back();
  if (sb[sb.size() - 2] != k)
    fail(node, fmt::format("inner dims differ: {} x {}", shape_string(a.shape), shape_string(b.shape)));
  const Shape ba(sa.begin(), sa.end() - 2), bb(sb.begin(), sb.end() - 2);
  const Shape batch = broadcast_shape(node, ba, bb);
  const std::size_t nbatch = shape_numel(batch);
  const Shape ta = broadcast_strides(ba, batch), tb = broadcast_strides(bb, batch);

  Shape out_shape = batch;
  if (!a_vec) out_shape.push_back(m);
  if (!b_vec) out_shape.push_back(n);
  Tensor r = Tensor::zeros(out_shape);
  Shape idx(batch.size(), 0);
  for (std::size_t bi = 0; bi < nbatch; ++bi) {
    std::int64_t oa = 0, ob = 0;
    for (std::size_t d = 0; d < batch.size(); ++d) {
      oa += idx[d] * ta[d];
      ob += idx[d] * tb[d];
    }
    gemm_block(a.f32.data() + oa * m * k, b.f32.data() + ob * k * n, r.f32.data() + bi * m * n, m, k, n, k, 1, n, 1,
               ctx.threads);
    for (std::size_t d = batch.size(); d-- > 0;) {
      if (++idx[d] < batch[d]) break;
      idx[d] = 0;
    }
  }
  return {std::move(r)};
}

std::vector<Tensor> gemm(const NodeDef& node, Inputs in, const ExecContext& ctx) {
  const Tensor& a = need_f32(node, in, 0);
  const Tensor& b = need_f32(node, in, 1);
  if (a.rank() != 2 || b.rank() != 2) fail(node, "operands must be 2-D");
  const bool trans_a = node.get_int("transA", 0) != 0, trans_b = node.get_int("transB", 0) != 0;
  const float alpha = node.get_float("alpha", 1.0f), beta = node.get_float("beta", 1.0f);
  const std::int64_t m = trans_a ? a.shape[1] : a.shape[0];
  const std::int64_t k = trans_a ? a.shape[0] : a.shape[1];
  const std::int64_t kb = trans_b ? b.shape[1] : b.shape[0];
  const std::int64_t n = trans_b ? b.shape[0] : b.shape[1];
  if (k != kb) fail(node, fmt::format("inner dims differ: {} x {}", a.shape_string(), b.shape_string()));
  Tensor r = Tensor::zeros({m, n});
  gemm_block(a.f32.data(), b.f32.data(), r.f32.data(), m, k, n, trans_a ? 1 : k, trans_a ? m : 1, trans_b ? 1 : n,
             trans_b ? k : 1, ctx.threads);
  if (alpha != 1.0f)
    for (auto& v : r.f32) v *= alpha;
  if (const Tensor* c = optional_input(in, 2); c != nullptr && beta != 0.0f) {
    if (c->dtype != DType::f32) fail(node, "C must be float32");
    const Shape bs = broadcast_shape(node, c->shape, r.shape);
    if (bs != r.shape) fail(node, "C does not broadcast to the output");
    const auto cb = binary_map(r.f32, r.shape, c->f32, c->shape, r.shape,
                               [beta](float x, float y) { return x + beta * y; });
    r.f32 = cb;
  }
  return {std::move(r)};
}

// ---------------------------------------------------------------- shape ops

std::vector<Tensor> reshape(const NodeDef& node, Inputs in, const ExecContext&) {
  Tensor r = need(node, in, 0);
  const auto target = as_ints(node, need(node, in, 1));
  const bool allow_zero = node.get_int("allowzero", 0) != 0;
  Shape shape(target.size());
  std::int64_t known = 1;
  int infer = -1;
  for (std::size_t i = 0; i < target.size(); ++i) {
    std::int64_t d = target[i];
    if (d == 0 && !allow_zero) {
      if (i >= r.shape.size()) fail(node, "0 dim beyond input rank");
      d = r.shape[i];
    }
    if (d == -1) {
      if (infer >= 0) fail(node, "more than one -1 dim");
      infer = static_cast<int>(i);
      continue;
    }
    if (d < 0) fail(node, "negative dim");
    shape[i] = d;
    known *= d;
  }
  const auto total = static_cast<std::int64_t>(r.numel());
  if (infer >= 0) {
    if (known == 0 || total % known != 0) fail(node, "cannot infer -1 dim");
    shape[static_cast<std::size_t>(infer)] = total / known;
  } else if (known != total) {
    fail(node, fmt::format("cannot reshape {} to {}", r.shape_string(), shape_string(shape)));
  }
  r.shape = std::move(shape);
  return {std::move(r)};
}

std::vector<Tensor> flatten(const NodeDef& node, Inputs in, const ExecContext&) {
  Tensor r = need(node, in, 0);
  std::int64_t axis = node.get_int("axis", 1);
  if (axis < 0) axis += static_cast<std::int64_t>(r.rank());
  if (axis < 0 || axis > static_cast<std::int64_t>(r.rank())) fail(node, "axis out of range");
  std::int64_t outer = 1, inner = 1;
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(r.rank()); ++i) (i < axis ? outer : inner) *= r.shape[i];
  r.shape = {outer, inner};
  return {std::move(r)};
}

std::vector<std::int64_t> axes_from(const NodeDef& node, Inputs in, std::size_t input_index) {
  if (const Tensor* t = optional_input(in, input_index)) return as_ints(node, *t);
  return node.get_ints("axes");
}

std::vector<Tensor> squeeze(const NodeDef& node, Inputs in, const ExecContext&) {
  Tensor r = need(node, in, 0);
  auto axes = axes_from(node, in, 1);
  for (auto& a : axes) a = normalize_axis(node, a, r.rank());
  Shape shape;
  for (std::size_t i = 0; i < r.rank(); ++i) {
    const bool listed = std::find(axes.begin(), axes.end(), static_cast<std::int64_t>(i)) != axes.end();
    if (listed && r.shape[i] != 1) fail(node, "squeezed dim is not 1");
    if (listed || (axes.empty() && r.shape[i] == 1)) continue;
    shape.push_back(r.shape[i]);
  }
  r.shape = std::move(shape);
  return {std::move(r)};
}

std::vector<Tensor> unsqueeze(const NodeDef& node, Inputs in, const ExecContext&) {
  Tensor r = need(node, in, 0);
  auto axes = axes_from(node, in, 1);
  const std::size_t rank = r.rank() + axes.size();
  for (auto& a : axes) a = normalize_axis(node, a, rank);
  std::sort(axes.begin(), axes.end());
  if (std::adjacent_find(axes.begin(), axes.end()) != axes.end()) fail(node, "repeated axis");
  Shape shape;
  std::size_t src = 0;
  for (std::size_t i = 0; i < rank; ++i) {
    if (std::binary_search(axes.begin(), axes.end(), static_cast<std::int64_t>(i)))
      shape.push_back(1);
    else
      shape.push_back(r.shape[src++]);
  }
  r.shape = std::move(shape);
  return {std::move(r)};
}

template <typename T>
std::vector<T> permute(const std::vector<T>& data, const Shape& shape, const Shape& perm) {
  const std::size_t rank = shape.size();
  const Shape in_strides = strides_of(shape);
  Shape out_shape(rank), step(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    out_shape[i] = shape[static_cast<std::size_t>(perm[i])];
    step[i] = in_strides[static_cast<std::size_t>(perm[i])];
  }
  std::vector<T> out(data.size());
  if (data.empty()) return out;
  Shape idx(rank, 0);
  std::int64_t off = 0;
  for (std::size_t pos = 0; pos < out.size(); ++pos) {
    out[pos] = data[static_cast<std::size_t>(off)];
    for (std::size_t d = rank; d-- > 0;) {
      off += step[d];
      if (++idx[d] < out_shape[d]) break;
      off -= step[d] * out_shape[d];
      idx[d] = 0;
    }
  }
  return out;
}

std::vector<Tensor> transpose(const NodeDef& node, Inputs in, const ExecContext&) {
  const Tensor& x = need(node, in, 0);
  Shape perm = node.get_ints("perm");
  if (perm.empty()) {
    perm.resize(x.rank());
    std::iota(perm.rbegin(), perm.rend(), 0);
  }
  Shape sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (sorted[i] != static_cast<std::int64_t>(i) || perm.size() != x.rank()) fail(node, "invalid perm");
  Tensor r;
  r.dtype = x.dtype;
  for (auto p : perm) r.shape.push_back(x.shape[static_cast<std::size_t>(p)]);
  if (x.dtype == DType::f32)
    r.f32 = permute(x.f32, x.shape, perm);
  else
    r.i64 = permute(x.i64, x.shape, perm);
  return {std::move(r)};
}

std::vector<Tensor> concat(const NodeDef& node, Inputs in, const ExecContext&) {
  const Tensor& first = need(node, in, 0);
  const std::size_t rank = first.rank();
  const auto axis = static_cast<std::size_t>(normalize_axis(node, node.get_int("axis", 0), rank));
  Shape out_shape = first.shape;
  out_shape[axis] = 0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const Tensor& t = need(node, in, i);
    if (t.dtype != first.dtype || t.rank() != rank) fail(node, "inputs differ in type or rank");
    for (std::size_t d = 0; d < rank; ++d)
      if (d != axis && t.shape[d] != first.shape[d]) fail(node, "inputs differ off the concat axis");
    out_shape[axis] += t.shape[axis];
  }
  std::int64_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= out_shape[d];
  for (std::size_t d = axis + 1; d < rank; ++d) inner *= out_shape[d];
  Tensor r;
  r.dtype = first.dtype;
  r.shape = out_shape;
  auto gather = [&](auto member) {
    auto& out = r.*member;
    out.reserve(shape_numel(out_shape));
    for (std::int64_t o = 0; o < outer; ++o)
      for (std::size_t i = 0; i < in.size(); ++i) {
        const auto& src = in[i]->*member;
        const std::int64_t block = in[i]->shape[axis] * inner;
        out.insert(out.end(), src.begin() + o * block, src.begin() + (o + 1) * block);
      }
  };
  if (first.dtype == DType::f32)
    gather(&Tensor::f32);
  else
    gather(&Tensor::i64);
  return {std::move(r)};
}

std::vector<Tensor> shape_op(const NodeDef& node, Inputs in, const ExecContext&) {
  const Tensor& x = need(node, in, 0);
  const auto rank = static_cast<std::int64_t>(x.rank());
  std::int64_t start = node.get_int("start", 0), end = node.get_int("end", rank);
  if (start < 0) start += rank;
  if (end < 0) end += rank;
  start = std::clamp<std::int64_t>(start, 0, rank);
  end = std::clamp<std::int64_t>(end, start, rank);
  Shape dims(x.shape.begin() + start, x.shape.begin() + end);
  return {Tensor::ints({static_cast<std::int64_t>(dims.size())}, dims)};
}

std::vector<Tensor> gather(const NodeDef& node, Inputs in, const ExecContext&) {
  const Tensor& data = need(node, in, 0);
  const auto indices = as_ints(node, need(node, in, 1));
  const Shape& ishape = need(node, in, 1).shape;
  const auto axis = static_cast<std::size_t>(normalize_axis(node, node.get_int("axis", 0), data.rank()));
  const std::int64_t dim = data.shape[axis];
  std::int64_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= data.shape[d];
  for (std::size_t d = axis + 1; d < data.rank(); ++d) inner *= data.shape[d];
  Tensor r;
  r.dtype = data.dtype;
  r.shape.assign(data.shape.begin(), data.shape.begin() + static_cast<std::ptrdiff_t>(axis));
  r.shape.insert(r.shape.end(), ishape.begin(), ishape.end());
  r.shape.insert(r.shape.end(), data.shape.begin() + static_cast<std::ptrdiff_t>(axis) + 1, data.shape.end());
  auto take = [&](auto member) {
    const auto& src = data.*member;
    auto& out = r.*member;
    for (std::int64_t o = 0; o < outer; ++o)
      for (std::int64_t idx : indices) {
        if (idx < 0) idx += dim;
        if (idx < 0 || idx >= dim) fail(node, "index out of range");
        const auto base = src.begin() + (o * dim + idx) * inner;
        out.insert(out.end(), base, base + inner);
      }
  };
  if (data.dtype == DType::f32)
    take(&Tensor::f32);
  else
    take(&Tensor::i64);
  return {std::move(r)};
}

std::vector<Tensor> slice(const NodeDef& node, Inputs in, const ExecContext&) {
  const Tensor& x = need(node, in, 0);
  const auto starts = as_ints(node, need(node, in, 1));
  const auto ends = as_ints(node, need(node, in, 2));
  std::vector<std::int64_t> axes, steps;
  if (const Tensor* t = optional_input(in, 3)) axes = as_ints(node, *t);
  if (const Tensor* t = optional_input(in, 4)) steps = as_ints(node, *t);
  if (axes.empty()) {
    axes.resize(starts.size());
    std::iota(axes.begin(), axes.end(), 0);
  }
  if (steps.empty()) steps.assign(starts.size(), 1);
  if (ends.size() != starts.size() || axes.size() != starts.size() || steps.size() != starts.size())
    fail(node, "starts/ends/axes/steps lengths differ");
  const std::size_t rank = x.rank();
  Shape begin(rank, 0), step(rank, 1), count = x.shape;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const auto a = static_cast<std::size_t>(normalize_axis(node, axes[i], rank));
    const std::int64_t dim = x.shape[a];
    const std::int64_t s = steps[i];
    if (s == 0) fail(node, "zero step");
    auto clampi = [&](std::int64_t v) {
      if (v < 0) v += dim;
      return s > 0 ? std::clamp<std::int64_t>(v, 0, dim) : std::clamp<std::int64_t>(v, -1, dim - 1);
    };
    const std::int64_t b = clampi(starts[i]), e = clampi(ends[i]);
    begin[a] = b;
    step[a] = s;
    count[a] = s > 0 ? std::max<std::int64_t>(0, (e - b + s - 1) / s) : std::max<std::int64_t>(0, (b - e - s - 1) / -s);
  }
  const Shape strides = strides_of(x.shape);
  Tensor r;
  r.dtype = x.dtype;
  r.shape = count;
  const std::size_t n = shape_numel(count);
  auto copy = [&](auto member) {
    const auto& src = x.*member;
    auto& out = r.*member;
    out.resize(n);
    Shape idx(rank, 0);
    for (std::size_t pos = 0; pos < n; ++pos) {
      std::int64_t off = 0;
      for (std::size_t d = 0; d < rank; ++d) off += (begin[d] + idx[d] * step[d]) * strides[d];
      out[pos] = src[static_cast<std::size_t>(off)];
      for (std::size_t d = rank; d-- > 0;) {
        if (++idx[d] < count[d]) break;
        idx[d] = 0;
      }
    }
  };
  if (x.dtype == DType::f32)
    copy(&Tensor::f32);
  else
    copy(&Tensor::i64);
  return {std::move(r)};
}

// ---------------------------------------------------------------- reductions

enum class Reduce { sum, mean, max };

std::vector<Tensor> reduce(const NodeDef& node, Inputs in, Reduce kind) {
  const Tensor& x = need_f32(node, in, 0);
  const bool keepdims = node.get_int("keepdims", 1) != 0;
  auto axes = axes_from(node, in, 1);
  if (axes.empty() && node.get_int("noop_with_empty_axes", 0) != 0) return {x};
  const std::size_t rank = x.rank();
  std::vector<bool> reduced(rank, axes.empty());
  for (auto a : axes) reduced[static_cast<std::size_t>(normalize_axis(node, a, rank))] = true;

  Shape kept(rank);
  for (std::size_t d = 0; d < rank; ++d) kept[d] = reduced[d] ? 1 : x.shape[d];
  const Shape out_strides = strides_of(kept);
  Shape step(rank);
  for (std::size_t d = 0; d < rank; ++d) step[d] = reduced[d] ? 0 : out_strides[d];

  const std::size_t n_out = shape_numel(kept);
  std::vector<double> acc(n_out, kind == Reduce::max ? -std::numeric_limits<double>::infinity() : 0.0);
  if (x.numel() > 0) {
    Shape idx(rank, 0);
    std::int64_t off = 0;
    for (std::size_t pos = 0; pos < x.numel(); ++pos) {
      const double v = x.f32[pos];
      auto& slot = acc[static_cast<std::size_t>(off)];
      slot = kind == Reduce::max ? std::max(slot, v) : slot + v;
      for (std::size_t d = rank; d-- > 0;) {
        off += step[d];
        if (++idx[d] < x.shape[d]) break;
        off -= step[d] * x.shape[d];
        idx[d] = 0;
      }
    }
  }
  if (kind == Reduce::mean) {
    const double count = static_cast<double>(x.numel()) / static_cast<double>(std::max<std::size_t>(n_out, 1));
    for (auto& v : acc) v /= count;
  }
  Shape out_shape;
  for (std::size_t d = 0; d < rank; ++d)
    if (!reduced[d] || keepdims) out_shape.push_back(kept[d]);
  Tensor r = Tensor::zeros(out_shape);
  for (std::size_t i = 0; i < n_out; ++i) r.f32[i] = static_cast<float>(acc[i]);
  return {std::move(r)};
}

std::vector<Tensor> softmax(const NodeDef& node, Inputs in, const ExecContext&) {
  Tensor r = need_f32(node, in, 0);
  const auto axis = static_cast<std::size_t>(normalize_axis(node, node.get_int("axis", -1), r.rank()));
  std::int64_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= r.shape[d];
  for (std::size_t d = axis + 1; d < r.rank(); ++d) inner *= r.shape[d];
  const std::int64_t dim = r.shape[axis];
  for (std::int64_t o = 0; o < outer; ++o)
    for (std::int64_t i = 0; i < inner; ++i) {
      float* base = r.f32.data() + o * dim * inner + i;
      float mx = -std::numeric_limits<float>::infinity();
      for (std::int64_t j = 0; j < dim; ++j) mx = std::max(mx, base[j * inner]);
      double sum = 0.0;
      for (std::int64_t j = 0; j < dim; ++j) {
        base[j * inner] = std::exp(base[j * inner] - mx);
        sum += base[j * inner];
      }
      for (std::int64_t j = 0; j < dim; ++j) base[j * inner] = static_cast<float>(base[j * inner] / sum);
    }
  return {std::move(r)};
}

// ---------------------------------------------------------------- conv / pool

// Spatial geometry for 1-D or 2-D conv and pooling, lifted to 2-D.
struct Window2d {
  std::int64_t kh = 1, kw = 1, sh = 1, sw = 1, dh = 1, dw = 1;
  std::int64_t pt = 0, pl = 0, pb = 0, pr = 0;
  std::int64_t ih = 1, iw = 1, oh = 1, ow = 1;
};

Window2d window_geometry(const NodeDef& node, const Shape& x, Shape kernel, bool ceil_mode) {
  if (x.size() != 3 && x.size() != 4) fail(node, "only 1-D and 2-D spatial inputs are supported");
  const std::size_t sr = x.size() - 2;
  if (kernel.size() != sr) fail(node, "kernel rank differs from input");
  Shape strides = node.get_ints("strides", Shape(sr, 1));
  Shape dil = node.get_ints("dilations", Shape(sr, 1));
  Shape pads = node.get_ints("pads", Shape(2 * sr, 0));
  if (strides.size() != sr || dil.size() != sr || pads.size() != 2 * sr) fail(node, "attribute rank mismatch");
  Shape in(x.begin() + 2, x.end());
  const std::string auto_pad = node.get_string("auto_pad", "NOTSET");
  if (auto_pad == "VALID") {
    std::fill(pads.begin(), pads.end(), 0);
  } else if (auto_pad == "SAME_UPPER" || auto_pad == "SAME_LOWER") {
    for (std::size_t d = 0; d < sr; ++d) {
      const std::int64_t out = (in[d] + strides[d] - 1) / strides[d];
      const std::int64_t total =
          std::max<std::int64_t>(0, (out - 1) * strides[d] + dil[d] * (kernel[d] - 1) + 1 - in[d]);
      const std::int64_t small = total / 2;
      pads[d] = auto_pad == "SAME_UPPER" ? small : total - small;
      pads[d + sr] = total - pads[d];
    }
  } else if (auto_pad != "NOTSET") {
    fail(node, "unsupported auto_pad " + auto_pad);
  }
  if (sr == 1) {
    kernel.insert(kernel.begin(), 1);
    strides.insert(strides.begin(), 1);
    dil.insert(dil.begin(), 1);
    pads = {0, pads[0], 0, pads[1]};
    in.insert(in.begin(), 1);
  }
  Window2d g;
  g.kh = kernel[0];
  g.kw = kernel[1];
  g.sh = strides[0];
  g.sw = strides[1];
  g.dh = dil[0];
  g.dw = dil[1];
  g.pt = pads[0];
  g.pl = pads[1];
  g.pb = pads[2];
  g.pr = pads[3];
  g.ih = in[0];
  g.iw = in[1];
  auto out_dim = [&](std::int64_t i, std::int64_t pa, std::int64_t pb, std::int64_t k, std::int64_t d,
                     std::int64_t s) {
    const std::int64_t span = i + pa + pb - (d * (k - 1) + 1);
    if (span < 0) fail(node, "kernel larger than padded input");
    std::int64_t o = (ceil_mode ? (span + s - 1) / s : span / s) + 1;
    // the last window must start inside the input or left padding
    if (ceil_mode && (o - 1) * s >= i + pa) --o;
    return o;
  };
  g.oh = out_dim(g.ih, g.pt, g.pb, g.kh, g.dh, g.sh);
  g.ow = out_dim(g.iw, g.pl, g.pr, g.kw, g.dw, g.sw);
  if (g.sh <= 0 || g.sw <= 0 || g.dh <= 0 || g.dw <= 0) fail(node, "non-positive stride or dilation");
  return g;
}

Shape output_shape(const Shape& x, std::int64_t channels, const Window2d& g) {
  if (x.size() == 3) return {x[0], channels, g.ow};
  return {x[0], channels, g.oh, g.ow};
}

std::vector<Tensor> conv(const NodeDef& node, Inputs in, const ExecContext& ctx) {
  const Tensor& x = need_f32(node, in, 0);
  const Tensor& w = need_f32(node, in, 1);
  const Tensor* bias = optional_input(in, 2);
  if (w.rank() != x.rank()) fail(node, "weight rank differs from input");
  const Shape kernel = node.get_ints("kernel_shape", Shape(w.shape.begin() + 2, w.shape.end()));
  const Window2d g = window_geometry(node, x.shape, kernel, false);
  const std::int64_t batch = x.shape[0], cin = x.shape[1], cout = w.shape[0];
  const std::int64_t group = node.get_int("group", 1);
  if (group <= 0 || cin % group != 0 || cout % group != 0 || w.shape[1] != cin / group)
    fail(node, "channel/group mismatch");
  if (bias != nullptr && (bias->dtype != DType::f32 || bias->numel() != static_cast<std::size_t>(cout)))
    fail(node, "bias length differs from output channels");
  const std::int64_t cin_g = cin / group, cout_g = cout / group;
  Tensor r = Tensor::zeros(output_shape(x.shape, cout, g));
  const std::int64_t in_plane = g.ih * g.iw, out_plane = g.oh * g.ow;

  parallel_for(static_cast<std::size_t>(batch * cout), ctx.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t job = begin; job < end; ++job) {
      const auto n = static_cast<std::int64_t>(job) / cout, m = static_cast<std::int64_t>(job) % cout;
      const std::int64_t grp = m / cout_g;
      float* out = r.f32.data() + (n * cout + m) * out_plane;
      const float b = bias != nullptr ? bias->f32[static_cast<std::size_t>(m)] : 0.0f;
      std::fill(out, out + out_plane, b);
      for (std::int64_t c = 0; c < cin_g; ++c) {
        const float* plane = x.f32.data() + (n * cin + grp * cin_g + c) * in_plane;
        const float* wk = w.f32.data() + ((m * cin_g + c) * g.kh) * g.kw;
        for (std::int64_t ky = 0; ky < g.kh; ++ky)
          for (std::int64_t kx = 0; kx < g.kw; ++kx) {
            const float wv = wk[ky * g.kw + kx];
            for (std::int64_t oy = 0; oy < g.oh; ++oy) {
              const std::int64_t iy = oy * g.sh - g.pt + ky * g.dh;
              if (iy < 0 || iy >= g.ih) continue;
              const float* row = plane + iy * g.iw;
              float* orow = out + oy * g.ow;
              for (std::int64_t ox = 0; ox < g.ow; ++ox) {
                const std::int64_t ix = ox * g.sw - g.pl + kx * g.dw;
                if (ix >= 0 && ix < g.iw) orow[ox] += wv * row[ix];
              }
            }
          }
      }
    }
  });
  return {std::move(r)};
}

std::vector<Tensor> pool(const NodeDef& node, Inputs in, bool is_max) {
  const Tensor& x = need_f32(node, in, 0);
  if (!node.has("kernel_shape")) fail(node, "kernel_shape is required");
  const bool ceil_mode = node.get_int("ceil_mode", 0) != 0;
  const Window2d g = window_geometry(node, x.shape, node.get_ints("kernel_shape"), ceil_mode);
  const bool include_pad = node.get_int("count_include_pad", 0) != 0;
  const std::int64_t planes = x.shape[0] * x.shape[1];
  Tensor r = Tensor::zeros(output_shape(x.shape, x.shape[1], g));
  for (std::int64_t p = 0; p < planes; ++p) {
    const float* plane = x.f32.data() + p * g.ih * g.iw;
    float* out = r.f32.data() + p * g.oh * g.ow;
    for (std::int64_t oy = 0; oy < g.oh; ++oy)
      for (std::int64_t ox = 0; ox < g.ow; ++ox) {
        float best = -std::numeric_limits<float>::infinity();
        double sum = 0.0;
        std::int64_t valid = 0, padded = 0;
        for (std::int64_t ky = 0; ky < g.kh; ++ky) {
          const std::int64_t iy = oy * g.sh - g.pt + ky * g.dh;
          for (std::int64_t kx = 0; kx < g.kw; ++kx) {
            const std::int64_t ix = ox * g.sw - g.pl + kx * g.dw;
            if (iy >= -g.pt && iy < g.ih + g.pb && ix >= -g.pl && ix < g.iw + g.pr) ++padded;
            if (iy < 0 || iy >= g.ih || ix < 0 || ix >= g.iw) continue;
            const float v = plane[iy * g.iw + ix];
            best = std::max(best, v);
            sum += v;
            ++valid;
          }
        }
        if (is_max)
          out[oy * g.ow + ox] = best;
        else
          out[oy * g.ow + ox] = static_cast<float>(sum / static_cast<double>(include_pad ? padded : valid));
      }
  }
  return {std::move(r)};
}

std::vector<Tensor> global_average_pool(const NodeDef& node, Inputs in, const ExecContext&) {
  const Tensor& x = need_f32(node, in, 0);
  if (x.rank() < 3) fail(node, "input rank must be >= 3");
  std::int64_t spatial = 1;
  for (std::size_t d = 2; d < x.rank(); ++d) spatial *= x.shape[d];
  Shape out_shape = {x.shape[0], x.shape[1]};
  out_shape.resize(x.rank(), 1);
  Tensor r = Tensor::zeros(out_shape);
  for (std::int64_t p = 0; p < x.shape[0] * x.shape[1]; ++p) {
    double sum = 0.0;
    for (std::int64_t i = 0; i < spatial; ++i) sum += x.f32[static_cast<std::size_t>(p * spatial + i)];
    r.f32[static_cast<std::size_t>(p)] = static_cast<float>(sum / static_cast<double>(spatial));
  }
  return {std::move(r)};
}

std::vector<Tensor> batch_norm(const NodeDef& node, Inputs in, const ExecContext&) {
  Tensor r = need_f32(node, in, 0);
  const Tensor& scale = need_f32(node, in, 1);
  const Tensor& shift = need_f32(node, in, 2);
  const Tensor& mean = need_f32(node, in, 3);
  const Tensor& var = need_f32(node, in, 4);
  if (node.get_int("training_mode", 0) != 0) fail(node, "training mode is not supported");
  const float eps = node.get_float("epsilon", 1e-5f);
  if (r.rank() < 2) fail(node, "input rank must be >= 2");
  const std::int64_t channels = r.shape[1];
  for (const Tensor* t : {&scale, &shift, &mean, &var})
    if (t->numel() != static_cast<std::size_t>(channels)) fail(node, "per-channel parameter length mismatch");
  std::int64_t spatial = 1;
  for (std::size_t d = 2; d < r.rank(); ++d) spatial *= r.shape[d];
  for (std::int64_t n = 0; n < r.shape[0]; ++n)
    for (std::int64_t c = 0; c < channels; ++c) {
      const auto ci = static_cast<std::size_t>(c);
      const float a = scale.f32[ci] / std::sqrt(var.f32[ci] + eps);
      const float b = shift.f32[ci] - mean.f32[ci] * a;
      float* p = r.f32.data() + (n * channels + c) * spatial;
      for (std::int64_t i = 0; i < spatial; ++i) p[i] = p[i] * a + b;
    }
  return {std::move(r)};
}

// ---------------------------------------------------------------- misc

std::vector<Tensor> constant(const NodeDef& node, Inputs, const ExecContext&) {
  if (node.has("value")) {
    const auto& attr = node.attrs.at("value");
    if (!attr.t) fail(node, "value is not a tensor");
    return {*attr.t};
  }
  if (node.has("value_float")) return {Tensor::floats({}, {node.get_float("value_float", 0.0f)})};
  if (node.has("value_int")) return {Tensor::ints({}, {node.get_int("value_int", 0)})};
  if (node.has("value_floats")) {
    auto v = node.attrs.at("value_floats").floats;
    return {Tensor::floats({static_cast<std::int64_t>(v.size())}, std::move(v))};
  }
  if (node.has("value_ints")) {
    auto v = node.get_ints("value_ints");
    return {Tensor::ints({static_cast<std::int64_t>(v.size())}, std::move(v))};
  }
  fail(node, "no supported value attribute");
}

std::vector<Tensor> cast(const NodeDef& node, Inputs in, const ExecContext&) {
  const Tensor& x = need(node, in, 0);
  const std::int64_t to = node.get_int("to", 1);
  Tensor r;
  r.shape = x.shape;
  if (to == 1 || to == 11) {  // FLOAT, DOUBLE
    r.dtype = DType::f32;
    if (x.dtype == DType::f32)
      r.f32 = x.f32;
    else
      for (auto v : x.i64) r.f32.push_back(static_cast<float>(v));
  } else if (to == 7 || to == 6) {  // INT64, INT32
    r.dtype = DType::i64;
    if (x.dtype == DType::i64)
      r.i64 = x.i64;
    else
      for (auto v : x.f32) r.i64.push_back(static_cast<std::int64_t>(v));
  } else {
    fail(node, fmt::format("unsupported target type {}", to));
  }
  return {std::move(r)};
}

std::vector<Tensor> clip(const NodeDef& node, Inputs in, const ExecContext&) {
  Tensor r = need_f32(node, in, 0);
  float lo = node.get_float("min", -std::numeric_limits<float>::infinity());
  float hi = node.get_float("max", std::numeric_limits<float>::infinity());
  if (const Tensor* t = optional_input(in, 1)) {
    if (t->dtype != DType::f32 || t->numel() != 1) fail(node, "min must be a float scalar");
    lo = t->f32[0];
  }
  if (const Tensor* t = optional_input(in, 2)) {
    if (t->dtype != DType::f32 || t->numel() != 1) fail(node, "max must be a float scalar");
    hi = t->f32[0];
  }
  for (auto& v : r.f32) v = std::min(std::max(v, lo), hi);
  return {std::move(r)};
}

const std::unordered_map<std::string, Kernel>& registry() {
  static const std::unordered_map<std::string, Kernel> table = [] {
    std::unordered_map<std::string, Kernel> k;
    k["Identity"] = [](const NodeDef& node, Inputs in, const ExecContext&) {
      return std::vector<Tensor>{need(node, in, 0)};
    };
    k["Constant"] = constant;
    k["Add"] = binary_kernel([](float a, float b) { return a + b; }, [](std::int64_t a, std::int64_t b) { return a + b; });
    k["Sub"] = binary_kernel([](float a, float b) { return a - b; }, [](std::int64_t a, std::int64_t b) { return a - b; });
    k["Mul"] = binary_kernel([](float a, float b) { return a * b; }, [](std::int64_t a, std::int64_t b) { return a * b; });
    k["Div"] = binary_kernel([](float a, float b) { return a / b; },
                             [](std::int64_t a, std::int64_t b) { return b == 0 ? std::int64_t{0} : a / b; });
    k["Pow"] = binary_kernel([](float a, float b) { return std::pow(a, b); },
                             [](std::int64_t a, std::int64_t b) {
                               return static_cast<std::int64_t>(std::pow(static_cast<double>(a), static_cast<double>(b)));
                             });
    k["Max"] = binary_kernel([](float a, float b) { return std::max(a, b); },
                             [](std::int64_t a, std::int64_t b) { return std::max(a, b); });
    k["Min"] = binary_kernel([](float a, float b) { return std::min(a, b); },
                             [](std::int64_t a, std::int64_t b) { return std::min(a, b); });
    k["Sqrt"] = unary_kernel([](float v) { return std::sqrt(v); });
    k["Log"] = unary_kernel([](float v) { return std::log(v); });
    k["Exp"] = unary_kernel([](float v) { return std::exp(v); });
    k["Abs"] = unary_kernel([](float v) { return std::abs(v); });
    k["Neg"] = unary_kernel([](float v) { return -v; });
    k["Relu"] = unary_kernel([](float v) { return v > 0.0f ? v : 0.0f; });
    k["Sigmoid"] = unary_kernel([](float v) { return 1.0f / (1.0f + std::exp(-v)); });
    k["Tanh"] = unary_kernel([](float v) { return std::tanh(v); });
    k["Softmax"] = softmax;
    k["MatMul"] = matmul;
    k["Gemm"] = gemm;
    k["Reshape"] = reshape;
    k["Flatten"] = flatten;
    k["Transpose"] = transpose;
    k["Squeeze"] = squeeze;
    k["Unsqueeze"] = unsqueeze;
    k["Concat"] = concat;
    k["Shape"] = shape_op;
    k["Gather"] = gather;
    k["Slice"] = slice;
    k["ReduceSum"] = [](const NodeDef& n, Inputs in, const ExecContext&) { return reduce(n, in, Reduce::sum); };
    k["ReduceMean"] = [](const NodeDef& n, Inputs in, const ExecContext&) { return reduce(n, in, Reduce::mean); };
    k["ReduceMax"] = [](const NodeDef& n, Inputs in, const ExecContext&) { return reduce(n, in, Reduce::max); };
    k["Clip"] = clip;
    k["Cast"] = cast;
    k["Conv"] = conv;
    k["BatchNormalization"] = batch_norm;
    k["MaxPool"] = [](const NodeDef& n, Inputs in, const ExecContext&) { return pool(n, in, true); };
    k["AveragePool"] = [](const NodeDef& n, Inputs in, const ExecContext&) { return pool(n, in, false); };
    k["GlobalAveragePool"] = global_average_pool;
    return k;
  }();
  return table;
}

}  // namespace

std::int64_t NodeDef::get_int(const std::string& key, std::int64_t fallback) const {
  const auto it = attrs.find(key);
  return it == attrs.end() ? fallback : it->second.i;
}

float NodeDef::get_float(const std::string& key, float fallback) const {
  const auto it = attrs.find(key);
  return it == attrs.end() ? fallback : it->second.f;
}

std::string NodeDef::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = attrs.find(key);
  return it == attrs.end() ? fallback : it->second.s;
}

std::vector<std::int64_t> NodeDef::get_ints(const std::string& key, std::vector<std::int64_t> fallback) const {
  const auto it = attrs.find(key);
  return it == attrs.end() ? fallback : it->second.ints;
}

const Kernel* find_kernel(const std::string& op_type) {
  const auto& table = registry();
  const auto it = table.find(op_type);
  return it == table.end() ? nullptr : &it->second;
}

std::vector<std::string> kernel_names() {
  std::vector<std::string> names;
  for (const auto& [name, kernel] : registry()) names.push_back(name);
  std::sort(names.begin(), names.end());
  return names;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t, std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n < 2 * workers) {
    fn(0, n);
    return;
  }
  const std::size_t per = (n + workers - 1) / workers;
  std::vector<std::jthread> pool;
  for (std::size_t begin = per; begin < n; begin += per)
    pool.emplace_back([&fn, begin, end = std::min(n, begin + per)] { fn(begin, end); });
  fn(0, std::min(n, per));
}

}  // namespace edgetag::inference::detail
