#include "bmnet/training.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace bmnet::training {

using numerics::Tape;
using numerics::Var;

void TrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("TrainConfig: epochs must be at least 1");
  if (!(reg_weight >= 0.0)) throw std::invalid_argument("TrainConfig: reg_weight must be non-negative");
  if (!(base_lr > 0.0)) throw std::invalid_argument("TrainConfig: base_lr must be positive");
  if (batch_cap == 0) throw std::invalid_argument("TrainConfig: batch_cap must be positive");
  if (min_cell == 0) throw std::invalid_argument("TrainConfig: min_cell must be positive");
}

numerics::AdamOptions TrainConfig::adam() const {
  numerics::AdamOptions o;
  o.base_lr = base_lr;
  o.milestones = milestones;
  return o;
}

double chamfer_loss(const Matrix& predicted, const Matrix& target) {
  return numerics::chamfer_distance(predicted, target);
}

double prior_regularizer(const Matrix& z_hat, const flow::CirclePrior& prior, bool has_padding) {
  if (z_hat.rows() == 0) throw std::invalid_argument("prior_regularizer: empty batch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < z_hat.rows(); ++i) {
    const double dev = std::hypot(z_hat(i, 0) - prior.center[0], z_hat(i, 1) - prior.center[1]) - prior.radius;
    acc += dev * dev;
  }
  double value = acc / static_cast<double>(z_hat.rows());
  if (has_padding && z_hat.cols() > 2) {
    value += z_hat.rightCols(z_hat.cols() - 2).squaredNorm() / static_cast<double>(z_hat.rows());
  }
  return value;
}

flow::CirclePrior update_prior(const flow::CirclePrior& prior, const Matrix& z, double momentum) {
  if (z.rows() == 0) throw std::invalid_argument("update_prior: empty batch");
  const double n = static_cast<double>(z.rows());
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (Eigen::Index i = 0; i < z.rows(); ++i) mean += Eigen::Vector2d(z(i, 0), z(i, 1));
  mean /= n;

  flow::CirclePrior out;
  out.center = momentum * prior.center + (1.0 - momentum) * mean;
  double radius = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    radius += (Eigen::Vector2d(z(i, 0), z(i, 1)) - out.center).norm();
  }
  out.radius = std::max(kMinPriorRadius, momentum * prior.radius + (1.0 - momentum) * radius / n);
  return out;
}

BatchLoss batch_loss(const flow::FlowNetwork& net, Tape& tape, const std::vector<Var>& leaves,
                     const CellBatch& batch, double reg_weight) {
  const auto [y_hat, z2_hat] =
      flow::forward(net, tape, leaves, tape.constant(batch.x), tape.constant(batch.z1), batch.rx, batch.ry);
  const auto [x_hat, z1_hat] =
      flow::inverse(net, tape, leaves, tape.constant(batch.y), tape.constant(batch.z2), batch.rx, batch.ry);

  BatchLoss out;
  out.z1_hat = z1_hat;
  out.z2_hat = z2_hat;
  out.forward = tape.chamfer(y_hat, tape.constant(batch.y));
  out.reverse = tape.chamfer(x_hat, tape.constant(batch.x));

  const auto z2_cols = static_cast<Eigen::Index>(net.config.z2_dim);
  std::vector<Eigen::Index> circle_cols{0, 1};
  Var reg = tape.add(
      tape.circle_deviation(z1_hat, batch.prior_z1.center.transpose(), batch.prior_z1.radius),
      tape.circle_deviation(tape.select_cols(z2_hat, circle_cols), batch.prior_z2.center.transpose(),
                            batch.prior_z2.radius));
  if (z2_cols > 2) {
    std::vector<Eigen::Index> pad;
    for (Eigen::Index c = 2; c < z2_cols; ++c) pad.push_back(c);
    reg = tape.add(reg, tape.mean_square(tape.select_cols(z2_hat, std::move(pad))));
  }
  out.reg = reg;
  out.total = tape.add(tape.add(out.forward, out.reverse), tape.scale(reg, reg_weight));
  return out;
}

clustering::ClusterModel cluster_dataset(const datasets::Dataset& data, const ClusterConfig& config) {
  clustering::KMeansOptions options;
  options.max_iter = config.max_iter;
  options.tol = config.tol;
  clustering::ClusterModel model;
  model.centroids_x = clustering::kmeans(data.xs(), config.n_x, derive_seed(config.seed, 0), options).centroids;
  model.centroids_y = clustering::kmeans(data.ys(), config.n_y, derive_seed(config.seed, 1), options).centroids;
  return model;
}

Trainer::Trainer(datasets::Dataset data, const flow::FlowConfig& flow_config,
                 const ClusterConfig& cluster_config, const TrainConfig& train_config)
    : rng_(train_config.seed) {
  train_config.validate();
  if (data.size() == 0) throw std::invalid_argument("train: empty dataset");
  if (flow_config.x_dim != 3 || flow_config.y_dim != 2) {
    throw std::invalid_argument("train: the flow must map R^3 inputs to R^2 outputs");
  }
  model_.clusters = cluster_dataset(data, cluster_config);
  model_.network = flow::init_network(flow_config);
  model_.prior = flow::make_prior(cluster_config.n_x, cluster_config.n_y, flow_config.z2_dim);
  model_.cluster_config = cluster_config;
  model_.train_config = train_config;

  const std::size_t n1 = model_.clusters.n1(), n2 = model_.clusters.n2();
  cells_.assign(n1 * n2, {});
  const auto ax = clustering::assign_all(model_.clusters.centroids_x, data.xs());
  const auto ay = clustering::assign_all(model_.clusters.centroids_y, data.ys());
  for (std::size_t k = 0; k < data.size(); ++k) cells_[ax[k] * n2 + ay[k]].push_back(k);
  model_.data = std::move(data);

  bool any = false;
  for (const auto& cell : cells_) any = any || cell.size() >= train_config.min_cell;
  if (!any) {
    std::ostringstream msg;
    msg << "train: no cell holds at least " << train_config.min_cell << " pairs; occupancy (i,j:count):";
    for (std::size_t i = 0; i < n1; ++i) {
      for (std::size_t j = 0; j < n2; ++j) msg << ' ' << i << ',' << j << ':' << cells_[i * n2 + j].size();
    }
    throw std::runtime_error(msg.str());
  }
  adam_ = numerics::make_adam_state(model_.network.params);
}

double Trainer::pass(std::size_t epoch, Rng& rng, TrainedModel& model, numerics::AdamState* adam,
                     const StepLogger& log) const {
  const TrainConfig& cfg = model.train_config;
  const numerics::AdamOptions adam_options = cfg.adam();
  const double lr = numerics::scheduled_lr(adam_options, epoch);
  const std::size_t n2 = model.clusters.n2();
  double total = 0.0;

  for (std::size_t cell = 0; cell < cells_.size(); ++cell) {
    if (cells_[cell].size() < cfg.min_cell) continue;
    const std::size_t i = cell / n2, j = cell % n2;
    std::vector<std::size_t> order = cells_[cell];
    for (std::size_t k = order.size() - 1; k > 0; --k) std::swap(order[k], order[rng.index(k + 1)]);

    const std::size_t chunks = (order.size() + cfg.batch_cap - 1) / cfg.batch_cap;
    std::size_t begin = 0;
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t end = order.size() * (c + 1) / chunks;
      const std::size_t b = end - begin;

      CellBatch batch;
      batch.x.resize(b, 3);
      batch.y.resize(b, 2);
      for (std::size_t r = 0; r < b; ++r) {
        const auto& pair = model.data.pairs[order[begin + r]];
        batch.x.row(r) = pair.x.transpose();
        batch.y.row(r) = pair.y.transpose();
      }
      batch.z1 = flow::sample_prior(model.prior, flow::PriorSide::Z1, i, b, rng);
      batch.z2 = flow::sample_prior(model.prior, flow::PriorSide::Z2, j, b, rng);
      batch.rx = model.clusters.centroids_x.row(i);
      batch.ry = model.clusters.centroids_y.row(j);
      batch.prior_z1 = model.prior.z1[i];
      batch.prior_z2 = model.prior.z2[j];

      Tape tape;
      std::vector<Var> leaves;
      leaves.reserve(model.network.params.size());
      for (std::size_t p = 0; p < model.network.params.size(); ++p) {
        leaves.push_back(tape.parameter(model.network.params, p));
      }
      const BatchLoss loss = batch_loss(model.network, tape, leaves, batch, cfg.reg_weight);
      const double value = tape.scalar(loss.total);
      if (!std::isfinite(value)) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) + ", cell (" +
                                 std::to_string(i) + "," + std::to_string(j) + ")");
      }
      total += value;

      if (adam) {
        const numerics::GradStore grads = tape.backward(loss.total, model.network.params);
        numerics::adam_step(model.network.params, grads, *adam, adam_options, lr);
        model.prior.z1[i] = update_prior(model.prior.z1[i], tape.value(loss.z1_hat), model.prior.momentum);
        model.prior.z2[j] = update_prior(model.prior.z2[j], tape.value(loss.z2_hat), model.prior.momentum);
      }
      if (log) {
        log(StepRecord{epoch, i, j, tape.scalar(loss.forward), tape.scalar(loss.reverse), tape.scalar(loss.reg)});
      }
      begin = end;
    }
  }
  return total;
}

void Trainer::run_epoch(std::size_t epoch, const StepLogger& log) {
  pass(epoch, rng_, model_, &adam_, log);
  if (!model_.network.params.all_finite()) {
    throw std::runtime_error("train: parameters became non-finite in epoch " + std::to_string(epoch));
  }
}

double Trainer::evaluate_loss(std::uint64_t seed) const {
  TrainedModel scratch = model_;
  Rng rng(seed);
  return pass(0, rng, scratch, nullptr, {});
}

TrainedModel train(const datasets::Dataset& data, const flow::FlowConfig& flow_config,
                   const ClusterConfig& cluster_config, const TrainConfig& train_config,
                   const StepLogger& log) {
  Trainer trainer(data, flow_config, cluster_config, train_config);
  for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) trainer.run_epoch(epoch, log);
  return trainer.release();
}

}  // namespace bmnet::training
