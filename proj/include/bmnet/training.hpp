#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "bmnet/adam.hpp"
#include "bmnet/clustering.hpp"
#include "bmnet/datasets.hpp"
#include "bmnet/flow.hpp"
#include "bmnet/rng.hpp"

namespace bmnet::training {

struct ClusterConfig {
  std::size_t n_x = 8;
  std::size_t n_y = 8;
  std::size_t max_iter = 200;
  double tol = 1e-8;
  std::uint64_t seed = 0;
};

struct TrainConfig {
  std::size_t epochs = 2000;
  double base_lr = 1e-4;
  std::vector<std::size_t> milestones{1000, 1500};
  std::size_t batch_cap = 256;
  std::size_t min_cell = 4;
  double reg_weight = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
  numerics::AdamOptions adam() const;
};

struct TrainedModel {
  flow::FlowNetwork network;
  clustering::ClusterModel clusters;
  flow::FiberPrior prior;
  datasets::Dataset data;
  ClusterConfig cluster_config;
  TrainConfig train_config;
};

struct StepRecord {
  std::size_t epoch = 0;
  std::size_t cell_i = 0;
  std::size_t cell_j = 0;
  double loss_forward = 0.0;
  double loss_reverse = 0.0;
  double reg = 0.0;  // unweighted sum of both prior regularizers
};
using StepLogger = std::function<void(const StepRecord&)>;

// Symmetric mean squared minimum distance; the same routine backs the MSMD metric.
double chamfer_loss(const Matrix& predicted, const Matrix& target);

// Mean squared radial deviation from the prior circle, plus the mean squared
// padding coordinates when `has_padding`.
double prior_regularizer(const Matrix& z_hat, const flow::CirclePrior& prior, bool has_padding);

// EMA step toward the batch's circle statistics. Radius is floored at 1e-3.
flow::CirclePrior update_prior(const flow::CirclePrior& prior, const Matrix& z, double momentum = 0.99);

inline constexpr double kMinPriorRadius = 1e-3;

// One cell batch: the full training objective, tape-recorded.
struct BatchLoss {
  numerics::Var total;
  numerics::Var forward;
  numerics::Var reverse;
  numerics::Var reg;
  numerics::Var z1_hat;  // from the inverse pass
  numerics::Var z2_hat;  // from the forward pass
};

struct CellBatch {
  Matrix x, y, z1, z2;
  RowVector rx, ry;
  flow::CirclePrior prior_z1, prior_z2;
};

BatchLoss batch_loss(const flow::FlowNetwork& net, numerics::Tape& tape,
                     const std::vector<numerics::Var>& leaves, const CellBatch& batch,
                     double reg_weight);

clustering::ClusterModel cluster_dataset(const datasets::Dataset& data, const ClusterConfig& config);

// Runs the cell-pair training procedure one epoch at a time.
class Trainer {
 public:
  Trainer(datasets::Dataset data, const flow::FlowConfig& flow_config,
          const ClusterConfig& cluster_config, const TrainConfig& train_config);

  void run_epoch(std::size_t epoch, const StepLogger& log = {});
  // Sum of batch losses over one pass with no updates; draws come from `seed`.
  double evaluate_loss(std::uint64_t seed) const;

  const TrainedModel& model() const { return model_; }
  TrainedModel release() { return std::move(model_); }
  // Cell occupancy, row-major over (i, j).
  const std::vector<std::vector<std::size_t>>& cells() const { return cells_; }

 private:
  double pass(std::size_t epoch, Rng& rng, TrainedModel& model, numerics::AdamState* adam,
              const StepLogger& log) const;

  TrainedModel model_;
  std::vector<std::vector<std::size_t>> cells_;
  numerics::AdamState adam_;
  Rng rng_;
};

TrainedModel train(const datasets::Dataset& data, const flow::FlowConfig& flow_config,
                   const ClusterConfig& cluster_config, const TrainConfig& train_config,
                   const StepLogger& log = {});

}  // namespace bmnet::training
