#pragma once

// Dense row-major float64 tensors with a tape-based reverse-mode autodiff.
//
// A Tape records every op in creation order, so the node list is already
// topologically sorted and backward() is a single reverse sweep. Vars are
// lightweight (tape, node id) handles and are only valid while their tape
// lives and until reset().

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace rearrange::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);
  /// Rank-2 tensor from nested rows.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor vector(std::initializer_list<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  /// Rank-2 element access.
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  Tensor reshaped(Shape shape) const;
  bool all_finite() const;
  void fill(double v);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  /// Gradient after Tape::backward(); zero-filled if the node received none.
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable leaf (a parameter).
  Var leaf(Tensor value);
  /// Non-differentiable input.
  Var constant(Tensor value);

  /// Records an op result. Throws NumericError when `value` is not finite.
  Var record(const char* op, Tensor value, std::span<const Var> parents, BackwardFn backward);
  Var record(const char* op, Tensor value, std::initializer_list<Var> parents, BackwardFn backward) {
    return record(op, std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(backward));
  }

  /// Reverse sweep from a scalar node. Throws ValidationError otherwise.
  void backward(Var loss);
  /// Drops every node; outstanding Vars become invalid.
  void reset();

  std::size_t size() const { return nodes_.size(); }
  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  const Tensor& grad(std::size_t id);
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  /// Gradient accumulator for node `id`, allocated on first use.
  Tensor& grad_buffer(std::size_t id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

// Primitives. Every op validates shapes (ValidationError) and traps
// non-finite outputs (NumericError).

/// [m,k] x [k,n] -> [m,n].
Var matmul(Var a, Var b);
/// Elementwise sum of equal shapes.
Var add(Var a, Var b);
/// [m,n] + [n] broadcast over rows.
Var add_bias(Var x, Var bias);
/// Rank-2 concatenation along columns.
Var concat(std::span<const Var> parts);
Var scale(Var x, double s);
/// x * sigmoid(x).
Var silu(Var x);
/// Mean over one axis; that axis is removed from the shape.
Var mean_axis(Var x, std::size_t axis);
/// Scalar sum of squares.
Var sum_squares(Var x);
Var reshape(Var x, Shape shape);
/// Fully-connected pairing inside groups of `group` consecutive rows:
/// out[(g*G + i)*G + j] = a[g*G + i] + b[g*G + j] for a, b of shape [N, H]
/// with N divisible by G. Output shape [N*G, H].
Var pairwise_sum(Var a, Var b, std::size_t group);
/// Fused mean_j silu(a[i] + b[j] + bias) over each group of `group` rows;
/// same value as mean_axis(reshape(silu(add_bias(pairwise_sum(a, b, G),
/// bias)), {N, G, H}), 1) without the [N*G, H] intermediates. Output [N, H].
Var edge_mean_silu(Var a, Var b, Var bias, std::size_t group);

// Plain (untraced) helpers.
void matmul_into(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
                 std::size_t k, std::size_t n);

}  // namespace rearrange::ad
