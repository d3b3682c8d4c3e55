#include "bmnet/inference.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bmnet::inference {
namespace {

struct Request {
  std::size_t row;
  Eigen::VectorXd z;
};

void validate(const training::TrainedModel& model, const Matrix& anchors, std::size_t dim,
              const InferenceConfig& cfg) {
  if (model.data.size() == 0) throw std::invalid_argument("inference: model has no training data");
  if (cfg.k == 0 || cfg.k > model.data.size()) {
    throw std::invalid_argument("inference: k must lie in [1, " + std::to_string(model.data.size()) + "]");
  }
  if (cfg.n == 0) throw std::invalid_argument("inference: n must be at least 1");
  if (static_cast<std::size_t>(anchors.cols()) != dim) {
    throw std::invalid_argument("inference: anchor must have " + std::to_string(dim) + " coordinates");
  }
  if (!anchors.allFinite()) throw std::invalid_argument("inference: anchor is not finite");
}

// Shared by both directions: `source` is the anchored side of the training
// data, `other` the side whose centroid is looked up through neighbors.
Matrix sample(const training::TrainedModel& model, const Matrix& anchors, const InferenceConfig& cfg,
              bool forward_direction) {
  const Matrix xs = model.data.xs();
  const Matrix ys = model.data.ys();
  const Matrix& source = forward_direction ? xs : ys;
  const Matrix& other = forward_direction ? ys : xs;
  const Matrix& source_centroids = forward_direction ? model.clusters.centroids_x : model.clusters.centroids_y;
  const Matrix& other_centroids = forward_direction ? model.clusters.centroids_y : model.clusters.centroids_x;
  const auto prior_side = forward_direction ? flow::PriorSide::Z1 : flow::PriorSide::Z2;
  const std::size_t n2 = model.clusters.n2();

  Rng rng(cfg.seed);
  // Requests grouped by (i, j) so each condition pair runs as one batch.
  std::map<std::size_t, std::vector<Request>> groups;
  for (Eigen::Index a = 0; a < anchors.rows(); ++a) {
    const std::size_t own = clustering::nearest_centroid(source_centroids, anchors.row(a));
    const auto neighbors = nearest_neighbors(source, anchors.row(a), cfg.k);
    for (std::size_t s = 0; s < cfg.n; ++s) {
      const std::size_t pick = neighbors[rng.index(neighbors.size())];
      const std::size_t looked_up = clustering::nearest_centroid(other_centroids, other.row(pick));
      Eigen::VectorXd z = flow::sample_prior(model.prior, prior_side, own, rng);
      const std::size_t i = forward_direction ? own : looked_up;
      const std::size_t j = forward_direction ? looked_up : own;
      groups[i * n2 + j].push_back(Request{static_cast<std::size_t>(a) * cfg.n + s, std::move(z)});
    }
  }

  const std::size_t out_dim = forward_direction ? model.network.config.y_dim : model.network.config.x_dim;
  Matrix out(anchors.rows() * static_cast<Eigen::Index>(cfg.n), out_dim);
  for (const auto& [key, requests] : groups) {
    const std::size_t i = key / n2, j = key % n2;
    const auto b = static_cast<Eigen::Index>(requests.size());
    Matrix data(b, anchors.cols());
    Matrix z(b, requests.front().z.size());
    for (Eigen::Index r = 0; r < b; ++r) {
      data.row(r) = anchors.row(static_cast<Eigen::Index>(requests[r].row / cfg.n));
      z.row(r) = requests[r].z.transpose();
    }
    const RowVector rx = model.clusters.centroids_x.row(i);
    const RowVector ry = model.clusters.centroids_y.row(j);
    const Matrix result = forward_direction ? flow::forward(model.network, data, z, rx, ry).first
                                            : flow::inverse(model.network, data, z, rx, ry).first;
    for (Eigen::Index r = 0; r < b; ++r) out.row(requests[r].row) = result.row(r);
  }
  return out;
}

}  // namespace

std::vector<std::size_t> nearest_neighbors(const Matrix& points, const Eigen::Ref<const RowVector>& query,
                                           std::size_t k) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k == 0 || k > n) throw std::invalid_argument("nearest_neighbors: k out of range");
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = (points.row(i) - query).squaredNorm();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); });
  order.resize(k);
  return order;
}

Matrix sample_forward(const training::TrainedModel& model, const Matrix& anchors, const InferenceConfig& cfg) {
  validate(model, anchors, 3, cfg);
  return sample(model, anchors, cfg, true);
}

Matrix sample_reverse(const training::TrainedModel& model, const Matrix& anchors, const InferenceConfig& cfg) {
  validate(model, anchors, 2, cfg);
  return sample(model, anchors, cfg, false);
}

Matrix sample_forward(const training::TrainedModel& model, const Eigen::Vector3d& x, const InferenceConfig& cfg) {
  return sample_forward(model, Matrix(x.transpose()), cfg);
}

Matrix sample_reverse(const training::TrainedModel& model, const Eigen::Vector2d& y, const InferenceConfig& cfg) {
  return sample_reverse(model, Matrix(y.transpose()), cfg);
}

}  // namespace bmnet::inference
