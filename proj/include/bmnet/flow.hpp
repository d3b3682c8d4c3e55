#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bmnet/rng.hpp"
#include "bmnet/tape.hpp"
#include "bmnet/types.hpp"

namespace bmnet::flow {

// The invertible map (x, z1 | rX, rY) -> (y, z2). Input and output sides
// share the total dimension `dim`.
struct FlowConfig {
  std::size_t x_dim = 3;
  std::size_t z1_dim = 2;
  std::size_t y_dim = 2;
  std::size_t z2_dim = 3;
  std::size_t blocks = 6;          // coupling blocks
  std::size_t coupling_split = 3;  // leading coordinates that condition each coupling
  std::size_t hidden = 64;
  std::size_t hidden_layers = 2;
  double scale_clamp = 2.0;
  std::uint64_t seed = 0;

  std::size_t dim() const { return x_dim + z1_dim; }
  // Throws std::invalid_argument when the dimensions do not line up.
  void validate() const;
};

enum class LayerKind { CondAffine, Coupling, Permutation };
enum class ConditionSide { X, Y };

// Dense tanh network; indices point into the owning network's ParamStore.
struct Subnet {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<std::size_t> weights;  // (out x in) per layer
  std::vector<std::size_t> biases;   // (1 x out) per layer
};

struct Layer {
  LayerKind kind = LayerKind::Permutation;
  ConditionSide side = ConditionSide::X;  // CondAffine only
  Subnet subnet;                          // CondAffine and Coupling
  std::vector<Eigen::Index> permutation;  // output column c takes input column permutation[c]
};

struct FlowNetwork {
  FlowConfig config;
  numerics::ParamStore params;
  std::vector<Layer> layers;
};

// Subnet hidden weights ~ U[-a, a] with a = sqrt(6 / (fan_in + fan_out)),
// zero biases, zero final layer: every layer starts as the identity.
FlowNetwork init_network(const FlowConfig& config);

// Tape-recorded passes. `leaves` holds one Var per entry of net.params.
std::pair<numerics::Var, numerics::Var> forward(const FlowNetwork& net, numerics::Tape& tape,
                                                const std::vector<numerics::Var>& leaves,
                                                numerics::Var x, numerics::Var z1,
                                                const RowVector& rx, const RowVector& ry);
std::pair<numerics::Var, numerics::Var> inverse(const FlowNetwork& net, numerics::Tape& tape,
                                                const std::vector<numerics::Var>& leaves,
                                                numerics::Var y, numerics::Var z2,
                                                const RowVector& rx, const RowVector& ry);

// Batched evaluation: one point per row, one condition pair for the batch.
std::pair<Matrix, Matrix> forward(const FlowNetwork& net, const Matrix& x, const Matrix& z1,
                                  const RowVector& rx, const RowVector& ry);
std::pair<Matrix, Matrix> inverse(const FlowNetwork& net, const Matrix& y, const Matrix& z2,
                                  const RowVector& rx, const RowVector& ry);

// Index map of all permutation layers composed: an identity-initialized
// network sends v to v(:, composed_permutation(net)).
std::vector<Eigen::Index> composed_permutation(const FlowNetwork& net);

// Largest |log-scale| applied by any affine or coupling layer on this batch.
double max_abs_log_scale(const FlowNetwork& net, const Matrix& x, const Matrix& z1,
                         const RowVector& rx, const RowVector& ry);

// Per-cluster circle priors: Z1 lives on a circle in R^2; Z2 on a circle in
// R^2 times {0} (third coordinate pinned).
struct CirclePrior {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 1.0;
};

enum class PriorSide { Z1, Z2 };

struct FiberPrior {
  std::vector<CirclePrior> z1;  // one per X cluster
  std::vector<CirclePrior> z2;  // one per Y cluster
  std::size_t z2_dim = 3;  // coordinates past the first two are pinned to 0
  double momentum = 0.99;
};

FiberPrior make_prior(std::size_t n_x_clusters, std::size_t n_y_clusters, std::size_t z2_dim = 3);

Eigen::VectorXd sample_prior(const FiberPrior& prior, PriorSide side, std::size_t cluster, Rng& rng);
// n draws stacked as rows.
Matrix sample_prior(const FiberPrior& prior, PriorSide side, std::size_t cluster, std::size_t n,
                    Rng& rng);

}  // namespace bmnet::flow
