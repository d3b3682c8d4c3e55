#include "bmnet/flow.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bmnet::flow {

using numerics::Tape;
using numerics::Var;

void FlowConfig::validate() const {
  if (x_dim + z1_dim != y_dim + z2_dim) {
    throw std::invalid_argument("FlowConfig: x_dim + z1_dim must equal y_dim + z2_dim");
  }
  if (z1_dim != 2) throw std::invalid_argument("FlowConfig: z1_dim must be 2 (circle prior)");
  if (z2_dim < 2) throw std::invalid_argument("FlowConfig: z2_dim must be at least 2 (circle prior)");
  if (x_dim == 0 || y_dim == 0) throw std::invalid_argument("FlowConfig: empty data side");
  if (coupling_split == 0 || coupling_split >= dim()) {
    throw std::invalid_argument("FlowConfig: coupling_split must lie in [1, dim)");
  }
  if (hidden == 0) throw std::invalid_argument("FlowConfig: hidden width must be positive");
  if (!(scale_clamp > 0.0)) throw std::invalid_argument("FlowConfig: scale_clamp must be positive");
}

namespace {

Subnet make_subnet(numerics::ParamStore& params, const std::string& prefix, std::size_t in,
                   std::size_t out, const FlowConfig& config, Rng& rng) {
  Subnet net;
  net.in = in;
  net.out = out;
  std::size_t fan_in = in;
  for (std::size_t l = 0; l <= config.hidden_layers; ++l) {
    const bool last = l == config.hidden_layers;
    const std::size_t fan_out = last ? out : config.hidden;
    Matrix w = Matrix::Zero(fan_out, fan_in);
    if (!last) {
      const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = rng.uniform(-a, a);
    }
    net.weights.push_back(params.add(prefix + ".w" + std::to_string(l), std::move(w)));
    net.biases.push_back(params.add(prefix + ".b" + std::to_string(l), Matrix::Zero(1, fan_out)));
    fan_in = fan_out;
  }
  return net;
}

Var apply_subnet(const Subnet& net, Tape& tape, const std::vector<Var>& leaves, Var input) {
  Var h = input;
  const Eigen::Index rows = tape.value(input).rows();
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    h = tape.matmul_nt(h, leaves[net.weights[l]]);
    h = tape.add(h, tape.broadcast_rows(leaves[net.biases[l]], rows));
    if (l + 1 < net.weights.size()) h = tape.tanh(h);
  }
  return h;
}

std::vector<Eigen::Index> iota_cols(Eigen::Index begin, Eigen::Index end) {
  std::vector<Eigen::Index> cols(static_cast<std::size_t>(end - begin));
  std::iota(cols.begin(), cols.end(), begin);
  return cols;
}

std::vector<Eigen::Index> invert(const std::vector<Eigen::Index>& perm) {
  std::vector<Eigen::Index> inv(perm.size());
  for (std::size_t c = 0; c < perm.size(); ++c) inv[static_cast<std::size_t>(perm[c])] = static_cast<Eigen::Index>(c);
  return inv;
}

struct ScaleShift {
  Var log_scale;  // clamped
  Var shift;
};

// Splits a subnet output into a clamped log-scale and a shift of width `width`.
ScaleShift split_scale_shift(Tape& tape, Var raw, Eigen::Index width, double clamp) {
  Var s = tape.select_cols(raw, iota_cols(0, width));
  Var t = tape.select_cols(raw, iota_cols(width, 2 * width));
  s = tape.scale(tape.tanh(tape.scale(s, 1.0 / clamp)), clamp);
  return {s, t};
}

ScaleShift cond_affine_params(const FlowNetwork& net, const Layer& layer, Tape& tape,
                              const std::vector<Var>& leaves, const RowVector& rx,
                              const RowVector& ry, Eigen::Index rows) {
  const RowVector& cond = layer.side == ConditionSide::X ? rx : ry;
  if (static_cast<std::size_t>(cond.size()) != layer.subnet.in) {
    throw std::invalid_argument("flow: conditioning vector has the wrong dimension");
  }
  const auto dim = static_cast<Eigen::Index>(net.config.dim());
  Var raw = apply_subnet(layer.subnet, tape, leaves, tape.constant(cond));
  ScaleShift ss = split_scale_shift(tape, raw, dim, net.config.scale_clamp);
  return {tape.broadcast_rows(ss.log_scale, rows), tape.broadcast_rows(ss.shift, rows)};
}

Var forward_pass(const FlowNetwork& net, Tape& tape, const std::vector<Var>& leaves, Var v,
                 const RowVector& rx, const RowVector& ry, double* max_log_scale) {
  const auto dim = static_cast<Eigen::Index>(net.config.dim());
  const auto split = static_cast<Eigen::Index>(net.config.coupling_split);
  const Eigen::Index rows = tape.value(v).rows();
  auto observe = [&](Var s) {
    if (max_log_scale) *max_log_scale = std::max(*max_log_scale, tape.value(s).cwiseAbs().maxCoeff());
  };
  for (const Layer& layer : net.layers) {
    switch (layer.kind) {
      case LayerKind::CondAffine: {
        const ScaleShift ss = cond_affine_params(net, layer, tape, leaves, rx, ry, rows);
        observe(ss.log_scale);
        v = tape.add(tape.mul(v, tape.exp(ss.log_scale)), ss.shift);
        break;
      }
      case LayerKind::Coupling: {
        Var u1 = tape.select_cols(v, iota_cols(0, split));
        Var u2 = tape.select_cols(v, iota_cols(split, dim));
        const ScaleShift ss = split_scale_shift(tape, apply_subnet(layer.subnet, tape, leaves, u1),
                                                dim - split, net.config.scale_clamp);
        observe(ss.log_scale);
        u2 = tape.add(tape.mul(u2, tape.exp(ss.log_scale)), ss.shift);
        v = tape.concat_cols(u1, u2);
        break;
      }
      case LayerKind::Permutation:
        v = tape.select_cols(v, layer.permutation);
        break;
    }
  }
  return v;
}

Var inverse_pass(const FlowNetwork& net, Tape& tape, const std::vector<Var>& leaves, Var v,
                 const RowVector& rx, const RowVector& ry) {
  const auto dim = static_cast<Eigen::Index>(net.config.dim());
  const auto split = static_cast<Eigen::Index>(net.config.coupling_split);
  const Eigen::Index rows = tape.value(v).rows();
  for (auto it = net.layers.rbegin(); it != net.layers.rend(); ++it) {
    const Layer& layer = *it;
    switch (layer.kind) {
      case LayerKind::CondAffine: {
        const ScaleShift ss = cond_affine_params(net, layer, tape, leaves, rx, ry, rows);
        v = tape.mul(tape.sub(v, ss.shift), tape.exp(tape.scale(ss.log_scale, -1.0)));
        break;
      }
      case LayerKind::Coupling: {
        Var u1 = tape.select_cols(v, iota_cols(0, split));
        Var u2 = tape.select_cols(v, iota_cols(split, dim));
        const ScaleShift ss = split_scale_shift(tape, apply_subnet(layer.subnet, tape, leaves, u1),
                                                dim - split, net.config.scale_clamp);
        u2 = tape.mul(tape.sub(u2, ss.shift), tape.exp(tape.scale(ss.log_scale, -1.0)));
        v = tape.concat_cols(u1, u2);
        break;
      }
      case LayerKind::Permutation:
        v = tape.select_cols(v, invert(layer.permutation));
        break;
    }
  }
  return v;
}

std::vector<Var> constant_leaves(const FlowNetwork& net, Tape& tape) {
  std::vector<Var> leaves;
  leaves.reserve(net.params.size());
  for (std::size_t i = 0; i < net.params.size(); ++i) leaves.push_back(tape.parameter(net.params, i));
  return leaves;
}

void check_batch(const Matrix& a, std::size_t a_dim, const Matrix& b, std::size_t b_dim) {
  if (static_cast<std::size_t>(a.cols()) != a_dim || static_cast<std::size_t>(b.cols()) != b_dim) {
    throw std::invalid_argument("flow: input batch has the wrong dimension");
  }
  if (a.rows() != b.rows()) throw std::invalid_argument("flow: input batches differ in length");
}

}  // namespace

FlowNetwork init_network(const FlowConfig& config) {
  config.validate();
  FlowNetwork net;
  net.config = config;
  Rng rng(config.seed);
  const std::size_t dim = config.dim();
  const std::size_t tail = dim - config.coupling_split;

  Layer first;
  first.kind = LayerKind::CondAffine;
  first.side = ConditionSide::X;
  first.subnet = make_subnet(net.params, "affine_x", config.x_dim, 2 * dim, config, rng);
  net.layers.push_back(std::move(first));

  for (std::size_t b = 0; b < config.blocks; ++b) {
    Layer coupling;
    coupling.kind = LayerKind::Coupling;
    coupling.subnet = make_subnet(net.params, "coupling" + std::to_string(b), config.coupling_split,
                                  2 * tail, config, rng);
    net.layers.push_back(std::move(coupling));

    Layer perm;
    perm.kind = LayerKind::Permutation;
    perm.permutation.resize(dim);
    std::iota(perm.permutation.begin(), perm.permutation.end(), Eigen::Index{0});
    for (std::size_t i = dim - 1; i > 0; --i) std::swap(perm.permutation[i], perm.permutation[rng.index(i + 1)]);
    net.layers.push_back(std::move(perm));
  }

  Layer last;
  last.kind = LayerKind::CondAffine;
  last.side = ConditionSide::Y;
  last.subnet = make_subnet(net.params, "affine_y", config.y_dim, 2 * dim, config, rng);
  net.layers.push_back(std::move(last));
  return net;
}

std::pair<Var, Var> forward(const FlowNetwork& net, Tape& tape, const std::vector<Var>& leaves, Var x,
                            Var z1, const RowVector& rx, const RowVector& ry) {
  const auto y_dim = static_cast<Eigen::Index>(net.config.y_dim);
  const auto dim = static_cast<Eigen::Index>(net.config.dim());
  Var out = forward_pass(net, tape, leaves, tape.concat_cols(x, z1), rx, ry, nullptr);
  return {tape.select_cols(out, iota_cols(0, y_dim)), tape.select_cols(out, iota_cols(y_dim, dim))};
}

std::pair<Var, Var> inverse(const FlowNetwork& net, Tape& tape, const std::vector<Var>& leaves, Var y,
                            Var z2, const RowVector& rx, const RowVector& ry) {
  const auto x_dim = static_cast<Eigen::Index>(net.config.x_dim);
  const auto dim = static_cast<Eigen::Index>(net.config.dim());
  Var out = inverse_pass(net, tape, leaves, tape.concat_cols(y, z2), rx, ry);
  return {tape.select_cols(out, iota_cols(0, x_dim)), tape.select_cols(out, iota_cols(x_dim, dim))};
}

std::pair<Matrix, Matrix> forward(const FlowNetwork& net, const Matrix& x, const Matrix& z1,
                                  const RowVector& rx, const RowVector& ry) {
  check_batch(x, net.config.x_dim, z1, net.config.z1_dim);
  Tape tape;
  const auto leaves = constant_leaves(net, tape);
  const auto [y, z2] = forward(net, tape, leaves, tape.constant(x), tape.constant(z1), rx, ry);
  return {tape.value(y), tape.value(z2)};
}

std::pair<Matrix, Matrix> inverse(const FlowNetwork& net, const Matrix& y, const Matrix& z2,
                                  const RowVector& rx, const RowVector& ry) {
  check_batch(y, net.config.y_dim, z2, net.config.z2_dim);
  Tape tape;
  const auto leaves = constant_leaves(net, tape);
  const auto [x, z1] = inverse(net, tape, leaves, tape.constant(y), tape.constant(z2), rx, ry);
  return {tape.value(x), tape.value(z1)};
}

std::vector<Eigen::Index> composed_permutation(const FlowNetwork& net) {
  std::vector<Eigen::Index> total(net.config.dim());
  std::iota(total.begin(), total.end(), Eigen::Index{0});
  for (const Layer& layer : net.layers) {
    if (layer.kind != LayerKind::Permutation) continue;
    std::vector<Eigen::Index> next(total.size());
    for (std::size_t c = 0; c < next.size(); ++c) next[c] = total[static_cast<std::size_t>(layer.permutation[c])];
    total = std::move(next);
  }
  return total;
}

double max_abs_log_scale(const FlowNetwork& net, const Matrix& x, const Matrix& z1,
                         const RowVector& rx, const RowVector& ry) {
  check_batch(x, net.config.x_dim, z1, net.config.z1_dim);
  Tape tape;
  const auto leaves = constant_leaves(net, tape);
  Matrix v(x.rows(), x.cols() + z1.cols());
  v << x, z1;
  double worst = 0.0;
  forward_pass(net, tape, leaves, tape.constant(v), rx, ry, &worst);
  return worst;
}

FiberPrior make_prior(std::size_t n_x_clusters, std::size_t n_y_clusters, std::size_t z2_dim) {
  if (z2_dim < 2) throw std::invalid_argument("make_prior: z2_dim must be at least 2");
  FiberPrior prior;
  prior.z2_dim = z2_dim;
  prior.z1.assign(n_x_clusters, CirclePrior{});
  prior.z2.assign(n_y_clusters, CirclePrior{});
  return prior;
}

Eigen::VectorXd sample_prior(const FiberPrior& prior, PriorSide side, std::size_t cluster, Rng& rng) {
  const auto& table = side == PriorSide::Z1 ? prior.z1 : prior.z2;
  if (cluster >= table.size()) throw std::out_of_range("sample_prior: cluster index out of range");
  const CirclePrior& c = table[cluster];
  const double u = rng.uniform(0.0, 2.0 * std::numbers::pi);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(side == PriorSide::Z1 ? 2 : static_cast<Eigen::Index>(prior.z2_dim));
  z[0] = c.center[0] + c.radius * std::cos(u);
  z[1] = c.center[1] + c.radius * std::sin(u);
  return z;
}

Matrix sample_prior(const FiberPrior& prior, PriorSide side, std::size_t cluster, std::size_t n,
                    Rng& rng) {
  Matrix out(n, side == PriorSide::Z1 ? 2 : static_cast<Eigen::Index>(prior.z2_dim));
  for (std::size_t i = 0; i < n; ++i) out.row(i) = sample_prior(prior, side, cluster, rng).transpose();
  return out;
}

}  // namespace bmnet::flow
