#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bmnet/types.hpp"

namespace bmnet::numerics {

// Named parameter matrices in insertion order.
class ParamStore {
 public:
  std::size_t add(std::string name, Matrix value);

  std::size_t size() const { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  Matrix& value(std::size_t i) { return values_.at(i); }
  const Matrix& value(std::size_t i) const { return values_.at(i); }
  std::size_t index_of(const std::string& name) const;
  std::size_t scalar_count() const;

  bool all_finite() const;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
};

// Gradients aligned index-for-index with a ParamStore.
using GradStore = std::vector<Matrix>;

struct Var {
  std::size_t id = 0;
};

struct ChamferMatches {
  double value = 0.0;
  std::vector<Eigen::Index> nearest_in_b;  // for each row of a
  std::vector<Eigen::Index> nearest_in_a;  // for each row of b
};

// Symmetric mean squared minimum distance between the rows of a and b.
// Ties resolve to the lowest index.
ChamferMatches chamfer_matches(const Matrix& a, const Matrix& b);
double chamfer_distance(const Matrix& a, const Matrix& b);

// Reverse-mode recording of matrix-valued operations. Every node's value is
// checked for finiteness when it is recorded.
class Tape {
 public:
  Var constant(Matrix value);
  Var parameter(const ParamStore& params, std::size_t index);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const;
  std::size_t node_count() const { return nodes_.size(); }

  // a * w^T, the layout of a dense layer with w stored (out x in).
  Var matmul_nt(Var a, Var w);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var tanh(Var a);
  Var exp(Var a);
  // Repeats a 1 x c row `rows` times.
  Var broadcast_rows(Var row, Eigen::Index rows);
  Var select_cols(Var a, std::vector<Eigen::Index> cols);
  Var concat_cols(Var a, Var b);
  Var sum(Var a);
  // Sum of squared entries divided by the row count.
  Var mean_square(Var a);
  Var chamfer(Var a, Var b);
  // Mean over rows of (|z - center| - radius)^2.
  Var circle_deviation(Var z, const RowVector& center, double radius);

  // Gradient of a 1x1 node with respect to every parameter leaf.
  GradStore backward(Var loss, const ParamStore& params);

 private:
  using Backprop = std::function<void(Tape&, const Matrix& grad_out)>;
  struct Node {
    Matrix value;
    const char* op = "";
    long param = -1;
    Backprop backprop;
  };

  Var record(Matrix value, const char* op, Backprop backprop);
  void accumulate(Var v, const Matrix& g);

  std::vector<Node> nodes_;
  std::vector<Matrix> grads_;
};

// A scalar-valued computation over parameter leaves (one Var per parameter).
using Computation = std::function<Var(Tape&, const std::vector<Var>& params)>;

struct GradResult {
  double value = 0.0;
  GradStore grads;
};

double evaluate(const ParamStore& params, const Computation& f);
GradResult grad(const ParamStore& params, const Computation& f);

struct FiniteDiffOptions {
  double h = 1e-5;
  // 0 checks every coordinate; otherwise a seeded random subset of this size.
  std::size_t max_coords = 0;
  // 0 keeps every coordinate of each parameter; otherwise a seeded random
  // subset of at most this many per parameter, applied before max_coords.
  std::size_t max_per_param = 0;
  std::uint64_t seed = 0;
};

// Worst relative error between central differences and grad(), with
// denominator max(|a|, |b|, 1e-8). Parameters are restored on return.
double finite_diff_check(ParamStore& params, const Computation& f,
                         const FiniteDiffOptions& options = {});

}  // namespace bmnet::numerics
