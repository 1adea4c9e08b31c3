#include "rearrange/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Core>

#include "rearrange/error.hpp"

namespace rearrange::ad {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_)) {
    throw ValidationError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                          shape_to_string(shape_));
  }
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ValidationError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

Tensor Tensor::vector(std::initializer_list<double> values) { return Tensor({values.size()}, std::vector<double>(values)); }

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw ValidationError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }

Var Tape::leaf(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(const char* op, Tensor value, std::span<const Var> parents, BackwardFn backward) {
  if (!value.all_finite()) throw NumericError(std::string("non-finite output in ") + op);
  bool needs = false;
  for (const Var& p : parents) {
    if (p.tape() != this) throw ValidationError(std::string(op) + ": operand from another tape");
    needs = needs || nodes_[p.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : BackwardFn{}, needs});
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_.at(id);
  if (n.grad.size() != n.value.size() || n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

const Tensor& Tape::grad(std::size_t id) { return grad_buffer(id); }

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw ValidationError("loss belongs to another tape");
  if (value(loss.id()).size() != 1) {
    throw ValidationError("backward needs a scalar loss, got shape " + shape_to_string(value(loss.id()).shape()));
  }
  for (Node& n : nodes_) n.grad = Tensor();
  grad_buffer(loss.id()).fill(1.0);
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.backward && n.grad.size() != 0) n.backward(*this, id);
  }
}

void Tape::reset() { nodes_.clear(); }

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

}  // namespace

void matmul_into(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
                 std::size_t k, std::size_t n) {
  MutMap(c.data(), idx(m), idx(n)).noalias() = ConstMap(a.data(), idx(m), idx(k)) * ConstMap(b.data(), idx(k), idx(n));
}

namespace {

void require_rank(const Var& v, std::size_t rank, const char* op) {
  if (v.value().rank() != rank) {
    throw ValidationError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                          shape_to_string(v.shape()));
  }
}

void accumulate(Tensor& dst, const Tensor& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

Var matmul(Var a, Var b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw ValidationError("matmul: shape mismatch " + shape_to_string(a.shape()) + " x " + shape_to_string(b.shape()));
  }
  Tensor out({m, n});
  matmul_into(a.value().data(), b.value().data(), out.data(), m, k, n);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record("matmul", std::move(out), {a, b}, [ia, ib, m, k, n](Tape& t, std::size_t self) {
    const ConstMap g(t.grad(self).data().data(), idx(m), idx(n));
    if (t.requires_grad(ia)) {
      MutMap(t.grad_buffer(ia).data().data(), idx(m), idx(k)).noalias() +=
          g * ConstMap(t.value(ib).data().data(), idx(k), idx(n)).transpose();
    }
    if (t.requires_grad(ib)) {
      MutMap(t.grad_buffer(ib).data().data(), idx(k), idx(n)).noalias() +=
          ConstMap(t.value(ia).data().data(), idx(m), idx(k)).transpose() * g;
    }
  });
}

Var add(Var a, Var b) {
  if (a.shape() != b.shape()) {
    throw ValidationError("add: shape mismatch " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  }
  Tensor out = a.value();
  accumulate(out, b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record("add", std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) accumulate(t.grad_buffer(ia), g);
    if (t.requires_grad(ib)) accumulate(t.grad_buffer(ib), g);
  });
}

Var add_bias(Var x, Var bias) {
  require_rank(x, 2, "add_bias");
  require_rank(bias, 1, "add_bias");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  if (bias.shape()[0] != n) {
    throw ValidationError("add_bias: bias " + shape_to_string(bias.shape()) + " for " + shape_to_string(x.shape()));
  }
  Tensor out = x.value();
  const auto bv = bias.value().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bv[j];
  const std::size_t ix = x.id(), ib = bias.id();
  return x.tape()->record("add_bias", std::move(out), {x, bias}, [ix, ib, m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ix)) accumulate(t.grad_buffer(ix), g);
    if (t.requires_grad(ib)) {
      auto gb = t.grad_buffer(ib).data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
    }
  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ValidationError("concat: no operands");
  Tape* tape = parts.front().tape();
  const std::size_t rows = parts.front().shape().at(0);
  std::vector<std::size_t> ids, widths;
  std::size_t cols = 0;
  for (const Var& p : parts) {
    require_rank(p, 2, "concat");
    if (p.tape() != tape) throw ValidationError("concat: operands from different tapes");
    if (p.shape()[0] != rows) throw ValidationError("concat: row count mismatch");
    ids.push_back(p.id());
    widths.push_back(p.shape()[1]);
    cols += p.shape()[1];
  }
  Tensor out({rows, cols});
  std::size_t off = 0;
  for (std::size_t q = 0; q < parts.size(); ++q) {
    const auto src = parts[q].value().data();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(src.data() + r * widths[q], widths[q], out.data().data() + r * cols + off);
    off += widths[q];
  }
  return tape->record("concat", std::move(out), parts, [ids, widths, rows, cols](Tape& t, std::size_t self) {
    const auto g = t.grad(self).data();
    std::size_t o = 0;
    for (std::size_t q = 0; q < ids.size(); ++q) {
      if (t.requires_grad(ids[q])) {
        auto gp = t.grad_buffer(ids[q]).data();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < widths[q]; ++c) gp[r * widths[q] + c] += g[r * cols + o + c];
      }
      o += widths[q];
    }
  });
}

Var scale(Var x, double s) {
  Tensor out = x.value();
  for (double& v : out.data()) v *= s;
  const std::size_t ix = x.id();
  return x.tape()->record("scale", std::move(out), {x}, [ix, s](Tape& t, std::size_t self) {
    const auto g = t.grad(self).data();
    auto gx = t.grad_buffer(ix).data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += s * g[i];
  });
}

Var silu(Var x) {
  Tensor out = x.value();
  std::vector<double> deriv(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = out[i];
    const double sig = 1.0 / (1.0 + std::exp(-v));
    out[i] = v * sig;
    deriv[i] = sig * (1.0 + v * (1.0 - sig));
  }
  const std::size_t ix = x.id();
  return x.tape()->record("silu", std::move(out), {x}, [ix, deriv = std::move(deriv)](Tape& t, std::size_t self) {
    const auto g = t.grad(self).data();
    auto gx = t.grad_buffer(ix).data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * deriv[i];
  });
}

Var mean_axis(Var x, std::size_t axis) {
  const Shape& shape = x.shape();
  if (axis >= shape.size()) throw ValidationError("mean_axis: axis out of range for " + shape_to_string(shape));
  const std::size_t n = shape[axis];
  if (n == 0) throw ValidationError("mean_axis: empty axis");
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  Shape out_shape = shape;
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor out(out_shape, 0.0);
  const auto xv = x.value().data();
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += xv[(o * n + a) * inner + i];
  for (double& v : out.data()) v *= inv;
  const std::size_t ix = x.id();
  return x.tape()->record("mean_axis", std::move(out), {x}, [ix, outer, n, inner, inv](Tape& t, std::size_t self) {
    const auto g = t.grad(self).data();
    auto gx = t.grad_buffer(ix).data();
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t i = 0; i < inner; ++i) gx[(o * n + a) * inner + i] += inv * g[o * inner + i];
  });
}

Var sum_squares(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v * v;
  const std::size_t ix = x.id();
  return x.tape()->record("sum_squares", Tensor({1}, std::vector<double>{s}), {x}, [ix](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    const auto xv = t.value(ix).data();
    auto gx = t.grad_buffer(ix).data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += 2.0 * xv[i] * g;
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  const std::size_t ix = x.id();
  return x.tape()->record("reshape", std::move(out), {x}, [ix](Tape& t, std::size_t self) {
    const auto g = t.grad(self).data();
    auto gx = t.grad_buffer(ix).data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
  });
}

Var pairwise_sum(Var a, Var b, std::size_t group) {
  require_rank(a, 2, "pairwise_sum");
  require_rank(b, 2, "pairwise_sum");
  if (a.shape() != b.shape()) throw ValidationError("pairwise_sum: operand shapes differ");
  const std::size_t rows = a.shape()[0], h = a.shape()[1];
  if (group == 0 || rows % group != 0) {
    throw ValidationError("pairwise_sum: " + std::to_string(rows) + " rows not divisible into groups of " +
                          std::to_string(group));
  }
  const std::size_t groups = rows / group;
  Tensor out({rows * group, h});
  const double* av = a.value().data().data();
  const double* bv = b.value().data().data();
  double* ov = out.data().data();
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t i = 0; i < group; ++i) {
      const double* ai = av + (g * group + i) * h;
      for (std::size_t j = 0; j < group; ++j) {
        const double* bj = bv + (g * group + j) * h;
        double* o = ov + ((g * group + i) * group + j) * h;
        for (std::size_t c = 0; c < h; ++c) o[c] = ai[c] + bj[c];
      }
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record("pairwise_sum", std::move(out), {a, b},
                          [ia, ib, groups, group, h](Tape& t, std::size_t self) {
                            const double* gv = t.grad(self).data().data();
                            const bool need_a = t.requires_grad(ia);
                            const bool need_b = t.requires_grad(ib);
                            double* ga = need_a ? t.grad_buffer(ia).data().data() : nullptr;
                            double* gb = need_b ? t.grad_buffer(ib).data().data() : nullptr;
                            for (std::size_t g = 0; g < groups; ++g) {
                              for (std::size_t i = 0; i < group; ++i) {
                                for (std::size_t j = 0; j < group; ++j) {
                                  const double* o = gv + ((g * group + i) * group + j) * h;
                                  if (ga) {
                                    double* dst = ga + (g * group + i) * h;
                                    for (std::size_t c = 0; c < h; ++c) dst[c] += o[c];
                                  }
                                  if (gb) {
                                    double* dst = gb + (g * group + j) * h;
                                    for (std::size_t c = 0; c < h; ++c) dst[c] += o[c];
                                  }
                                }
                              }
                            }
                          });
}

Var edge_mean_silu(Var a, Var b, Var bias, std::size_t group) {
  require_rank(a, 2, "edge_mean_silu");
  require_rank(b, 2, "edge_mean_silu");
  require_rank(bias, 1, "edge_mean_silu");
  if (a.shape() != b.shape()) throw ValidationError("edge_mean_silu: operand shapes differ");
  const std::size_t rows = a.shape()[0], h = a.shape()[1];
  if (bias.shape()[0] != h) throw ValidationError("edge_mean_silu: bias width mismatch");
  if (group == 0 || rows % group != 0) {
    throw ValidationError("edge_mean_silu: " + std::to_string(rows) + " rows not divisible into groups of " +
                          std::to_string(group));
  }
  const std::size_t groups = rows / group;
  const double inv = 1.0 / static_cast<double>(group);
  Tensor out({rows, h}, 0.0);
  // d silu / d pre for every edge, kept for the backward pass.
  std::vector<double> deriv(rows * group * h);
  const double* av = a.value().data().data();
  const double* bv = b.value().data().data();
  const double* cv = bias.value().data().data();
  double* ov = out.data().data();
  std::vector<double> ab(h);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t i = 0; i < group; ++i) {
      const double* ai = av + (g * group + i) * h;
      for (std::size_t c = 0; c < h; ++c) ab[c] = ai[c] + cv[c];
      double* o = ov + (g * group + i) * h;
      for (std::size_t j = 0; j < group; ++j) {
        const double* bj = bv + (g * group + j) * h;
        double* d = deriv.data() + ((g * group + i) * group + j) * h;
        for (std::size_t c = 0; c < h; ++c) {
          const double pre = ab[c] + bj[c];
          const double sig = 1.0 / (1.0 + std::exp(-pre));
          o[c] += pre * sig;
          d[c] = sig * (1.0 + pre * (1.0 - sig));
        }
      }
      for (std::size_t c = 0; c < h; ++c) o[c] *= inv;
    }
  }
  const std::size_t ia = a.id(), ib = b.id(), ic = bias.id();
  return a.tape()->record(
      "edge_mean_silu", std::move(out), {a, b, bias},
      [ia, ib, ic, groups, group, h, inv, deriv = std::move(deriv)](Tape& t, std::size_t self) {
        const double* gv = t.grad(self).data().data();
        double* ga = t.requires_grad(ia) ? t.grad_buffer(ia).data().data() : nullptr;
        double* gb = t.requires_grad(ib) ? t.grad_buffer(ib).data().data() : nullptr;
        double* gc = t.requires_grad(ic) ? t.grad_buffer(ic).data().data() : nullptr;
        std::vector<double> row(h);
        for (std::size_t g = 0; g < groups; ++g) {
          for (std::size_t i = 0; i < group; ++i) {
            const double* go = gv + (g * group + i) * h;
            std::fill(row.begin(), row.end(), 0.0);
            for (std::size_t j = 0; j < group; ++j) {
              const double* d = deriv.data() + ((g * group + i) * group + j) * h;
              double* dst = gb ? gb + (g * group + j) * h : nullptr;
              for (std::size_t c = 0; c < h; ++c) {
                const double e = inv * go[c] * d[c];
                row[c] += e;
                if (dst) dst[c] += e;
              }
            }
            if (ga) {
              double* dst = ga + (g * group + i) * h;
              for (std::size_t c = 0; c < h; ++c) dst[c] += row[c];
            }
            if (gc) {
              for (std::size_t c = 0; c < h; ++c) gc[c] += row[c];
            }
          }
        }
      });
}

}  // namespace rearrange::ad
