#include "bmnet/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bmnet/rng.hpp"

namespace bmnet::numerics {

std::size_t ParamStore::add(std::string name, Matrix value) {
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return values_.size() - 1;
}

std::size_t ParamStore::index_of(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw std::out_of_range("ParamStore: no parameter named " + name);
  return static_cast<std::size_t>(it - names_.begin());
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

bool ParamStore::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](const Matrix& m) { return m.allFinite(); });
}

ChamferMatches chamfer_matches(const Matrix& a, const Matrix& b) {
  if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument("chamfer: empty point set");
  if (a.cols() != b.cols()) throw std::invalid_argument("chamfer: dimension mismatch");
  const Eigen::Index n = a.rows(), m = b.rows(), d = a.cols();
  ChamferMatches out;
  out.nearest_in_b.assign(n, 0);
  out.nearest_in_a.assign(m, 0);
  std::vector<double> best_a(n, std::numeric_limits<double>::infinity());
  std::vector<double> best_b(m, std::numeric_limits<double>::infinity());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      double dist = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) {
        const double diff = a(i, k) - b(j, k);
        dist += diff * diff;
      }
      if (dist < best_a[i]) {
        best_a[i] = dist;
        out.nearest_in_b[i] = j;
      }
      if (dist < best_b[j]) {
        best_b[j] = dist;
        out.nearest_in_a[j] = i;
      }
    }
  }
  double sum_a = 0.0, sum_b = 0.0;
  for (double v : best_a) sum_a += v;
  for (double v : best_b) sum_b += v;
  out.value = sum_a / static_cast<double>(n) + sum_b / static_cast<double>(m);
  return out;
}

double chamfer_distance(const Matrix& a, const Matrix& b) { return chamfer_matches(a, b).value; }

Var Tape::record(Matrix value, const char* op, Backprop backprop) {
  if (!value.allFinite()) {
    throw std::runtime_error(std::string("non-finite value at node '") + op + "' #" +
                             std::to_string(nodes_.size()));
  }
  nodes_.push_back(Node{std::move(value), op, -1, std::move(backprop)});
  return Var{nodes_.size() - 1};
}

void Tape::accumulate(Var v, const Matrix& g) {
  Matrix& slot = grads_[v.id];
  if (slot.size() == 0) {
    slot = g;
  } else {
    slot += g;
  }
}

Var Tape::constant(Matrix value) { return record(std::move(value), "constant", nullptr); }

Var Tape::parameter(const ParamStore& params, std::size_t index) {
  Var v = record(params.value(index), "parameter", nullptr);
  nodes_[v.id].param = static_cast<long>(index);
  return v;
}

double Tape::scalar(Var v) const {
  const Matrix& m = value(v);
  if (m.size() != 1) throw std::logic_error("Tape::scalar: node is not 1x1");
  return m(0, 0);
}

Var Tape::matmul_nt(Var a, Var w) {
  const Matrix& av = value(a);
  const Matrix& wv = value(w);
  if (av.cols() != wv.cols()) throw std::invalid_argument("matmul_nt: inner dimension mismatch");
  Matrix out = av * wv.transpose();
  return record(std::move(out), "matmul", [a, w](Tape& t, const Matrix& g) {
    t.accumulate(a, g * t.value(w));
    t.accumulate(w, g.transpose() * t.value(a));
  });
}

Var Tape::add(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw std::invalid_argument("add: shape mismatch");
  }
  return record(value(a) + value(b), "add", [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var Tape::sub(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw std::invalid_argument("sub: shape mismatch");
  }
  return record(value(a) - value(b), "sub", [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Var Tape::mul(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw std::invalid_argument("mul: shape mismatch");
  }
  Matrix out = value(a).cwiseProduct(value(b));
  return record(std::move(out), "mul", [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(t.value(b)));
    t.accumulate(b, g.cwiseProduct(t.value(a)));
  });
}

Var Tape::scale(Var a, double factor) {
  return record(value(a) * factor, "scale",
                [a, factor](Tape& t, const Matrix& g) { t.accumulate(a, g * factor); });
}

Var Tape::tanh(Var a) {
  Matrix out = value(a).array().tanh().matrix();
  const std::size_t self = nodes_.size();
  return record(std::move(out), "tanh", [a, self](Tape& t, const Matrix& g) {
    const Matrix& y = t.nodes_[self].value;
    t.accumulate(a, (g.array() * (1.0 - y.array().square())).matrix());
  });
}

Var Tape::exp(Var a) {
  Matrix out = value(a).array().exp().matrix();
  const std::size_t self = nodes_.size();
  return record(std::move(out), "exp", [a, self](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(t.nodes_[self].value));
  });
}

Var Tape::broadcast_rows(Var row, Eigen::Index rows) {
  if (value(row).rows() != 1) throw std::invalid_argument("broadcast_rows: input must be a single row");
  Matrix out = value(row).replicate(rows, 1);
  return record(std::move(out), "broadcast", [row](Tape& t, const Matrix& g) {
    t.accumulate(row, g.colwise().sum());
  });
}

Var Tape::select_cols(Var a, std::vector<Eigen::Index> cols) {
  const Matrix& av = value(a);
  Matrix out(av.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (cols[c] < 0 || cols[c] >= av.cols()) throw std::out_of_range("select_cols: column index");
    out.col(static_cast<Eigen::Index>(c)) = av.col(cols[c]);
  }
  const Eigen::Index in_cols = av.cols();
  return record(std::move(out), "select", [a, cols = std::move(cols), in_cols](Tape& t, const Matrix& g) {
    Matrix back = Matrix::Zero(g.rows(), in_cols);
    for (std::size_t c = 0; c < cols.size(); ++c) back.col(cols[c]) += g.col(static_cast<Eigen::Index>(c));
    t.accumulate(a, back);
  });
}

Var Tape::concat_cols(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (av.rows() != bv.rows()) throw std::invalid_argument("concat_cols: row mismatch");
  Matrix out(av.rows(), av.cols() + bv.cols());
  out << av, bv;
  const Eigen::Index split = av.cols();
  return record(std::move(out), "concat", [a, b, split](Tape& t, const Matrix& g) {
    t.accumulate(a, g.leftCols(split));
    t.accumulate(b, g.rightCols(g.cols() - split));
  });
}

Var Tape::sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = value(a).sum();
  return record(std::move(out), "sum", [a](Tape& t, const Matrix& g) {
    const Matrix& av = t.value(a);
    t.accumulate(a, Matrix::Constant(av.rows(), av.cols(), g(0, 0)));
  });
}

Var Tape::mean_square(Var a) {
  const Matrix& av = value(a);
  if (av.rows() == 0) throw std::invalid_argument("mean_square: empty input");
  Matrix out(1, 1);
  out(0, 0) = av.squaredNorm() / static_cast<double>(av.rows());
  return record(std::move(out), "mean_square", [a](Tape& t, const Matrix& g) {
    const Matrix& av = t.value(a);
    t.accumulate(a, av * (2.0 * g(0, 0) / static_cast<double>(av.rows())));
  });
}

Var Tape::chamfer(Var a, Var b) {
  ChamferMatches matches = chamfer_matches(value(a), value(b));
  Matrix out(1, 1);
  out(0, 0) = matches.value;
  // Subgradient: only the current argmin pairs carry gradient.
  return record(std::move(out), "chamfer", [a, b, matches = std::move(matches)](Tape& t, const Matrix& g) {
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    const double wa = 2.0 * g(0, 0) / static_cast<double>(av.rows());
    const double wb = 2.0 * g(0, 0) / static_cast<double>(bv.rows());
    Matrix ga = Matrix::Zero(av.rows(), av.cols());
    Matrix gb = Matrix::Zero(bv.rows(), bv.cols());
    for (Eigen::Index i = 0; i < av.rows(); ++i) {
      const Eigen::Index j = matches.nearest_in_b[i];
      const RowVector diff = (av.row(i) - bv.row(j)) * wa;
      ga.row(i) += diff;
      gb.row(j) -= diff;
    }
    for (Eigen::Index j = 0; j < bv.rows(); ++j) {
      const Eigen::Index i = matches.nearest_in_a[j];
      const RowVector diff = (av.row(i) - bv.row(j)) * wb;
      ga.row(i) += diff;
      gb.row(j) -= diff;
    }
    t.accumulate(a, ga);
    t.accumulate(b, gb);
  });
}

Var Tape::circle_deviation(Var z, const RowVector& center, double radius) {
  const Matrix& zv = value(z);
  if (zv.rows() == 0) throw std::invalid_argument("circle_deviation: empty batch");
  if (zv.cols() != center.size()) throw std::invalid_argument("circle_deviation: dimension mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < zv.rows(); ++i) {
    const double dev = (zv.row(i) - center).norm() - radius;
    acc += dev * dev;
  }
  Matrix out(1, 1);
  out(0, 0) = acc / static_cast<double>(zv.rows());
  return record(std::move(out), "circle_deviation", [z, center, radius](Tape& t, const Matrix& g) {
    const Matrix& zv = t.value(z);
    Matrix gz = Matrix::Zero(zv.rows(), zv.cols());
    const double w = 2.0 * g(0, 0) / static_cast<double>(zv.rows());
    for (Eigen::Index i = 0; i < zv.rows(); ++i) {
      const RowVector offset = zv.row(i) - center;
      const double dist = offset.norm();
      if (dist > 0.0) gz.row(i) = offset * (w * (dist - radius) / dist);
    }
    t.accumulate(z, gz);
  });
}

GradStore Tape::backward(Var loss, const ParamStore& params) {
  if (value(loss).size() != 1) throw std::logic_error("backward: loss must be a 1x1 node");
  grads_.assign(nodes_.size(), Matrix());
  grads_[loss.id] = Matrix::Ones(1, 1);
  GradStore out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    out[i] = Matrix::Zero(params.value(i).rows(), params.value(i).cols());
  }
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (grads_[id].size() == 0) continue;
    if (node.param >= 0) {
      out[static_cast<std::size_t>(node.param)] += grads_[id];
    } else if (node.backprop) {
      node.backprop(*this, grads_[id]);
    }
    if (!grads_[id].allFinite()) {
      throw std::runtime_error(std::string("non-finite gradient at node '") + node.op + "' #" +
                               std::to_string(id));
    }
  }
  grads_.clear();
  return out;
}

namespace {

Var run(Tape& tape, const ParamStore& params, const Computation& f) {
  std::vector<Var> leaves;
  leaves.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) leaves.push_back(tape.parameter(params, i));
  return f(tape, leaves);
}

}  // namespace

double evaluate(const ParamStore& params, const Computation& f) {
  Tape tape;
  return tape.scalar(run(tape, params, f));
}

GradResult grad(const ParamStore& params, const Computation& f) {
  Tape tape;
  const Var loss = run(tape, params, f);
  GradResult r;
  r.value = tape.scalar(loss);
  if (!std::isfinite(r.value)) throw std::runtime_error("grad: loss is not finite");
  r.grads = tape.backward(loss, params);
  return r;
}

double finite_diff_check(ParamStore& params, const Computation& f, const FiniteDiffOptions& options) {
  if (!(options.h > 0.0)) throw std::invalid_argument("finite_diff_check: h must be positive");
  const GradResult analytic = grad(params, f);

  Rng rng(options.seed);
  std::vector<std::pair<std::size_t, Eigen::Index>> coords;
  for (std::size_t p = 0; p < params.size(); ++p) {
    std::vector<Eigen::Index> entries(static_cast<std::size_t>(params.value(p).size()));
    std::iota(entries.begin(), entries.end(), 0);
    if (options.max_per_param > 0 && options.max_per_param < entries.size()) {
      for (std::size_t i = 0; i < options.max_per_param; ++i) {
        std::swap(entries[i], entries[i + rng.index(entries.size() - i)]);
      }
      entries.resize(options.max_per_param);
    }
    for (Eigen::Index k : entries) coords.emplace_back(p, k);
  }
  if (options.max_coords > 0 && options.max_coords < coords.size()) {
    for (std::size_t i = 0; i < options.max_coords; ++i) {
      std::swap(coords[i], coords[i + rng.index(coords.size() - i)]);
    }
    coords.resize(options.max_coords);
  }

  double worst = 0.0;
  for (const auto& [p, k] : coords) {
    double& entry = params.value(p).data()[k];
    const double saved = entry;
    entry = saved + options.h;
    const double up = evaluate(params, f);
    entry = saved - options.h;
    const double down = evaluate(params, f);
    entry = saved;
    const double numeric = (up - down) / (2.0 * options.h);
    const double exact = analytic.grads[p].data()[k];
    const double denom = std::max({std::abs(numeric), std::abs(exact), 1e-8});
    worst = std::max(worst, std::abs(numeric - exact) / denom);
  }
  return worst;
}

}  // namespace bmnet::numerics
