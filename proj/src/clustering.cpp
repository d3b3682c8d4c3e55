#include "bmnet/clustering.hpp"

#include <limits>
#include <stdexcept>
#include <string>

#include "bmnet/rng.hpp"

namespace bmnet::clustering {
namespace {

double squared_distance(const Eigen::Ref<const RowVector>& a, const Eigen::Ref<const RowVector>& b) {
  double acc = 0.0;
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    acc += diff * diff;
  }
  return acc;
}

Matrix seed_plus_plus(const Matrix& points, std::size_t k, Rng& rng) {
  const auto n = static_cast<std::size_t>(points.rows());
  Matrix centroids(k, points.cols());
  centroids.row(0) = points.row(rng.index(n));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points.row(i), centroids.row(c - 1)));
      total += nearest[i];
    }
    if (!(total > 0.0)) {
      throw std::invalid_argument("kmeans: fewer than k distinct points (k = " + std::to_string(k) + ")");
    }
    const double target = rng.uniform() * total;
    double running = 0.0;
    std::size_t chosen = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (nearest[i] <= 0.0) continue;
      running += nearest[i];
      chosen = i;
      if (running > target) break;
    }
    centroids.row(c) = points.row(chosen);
  }
  return centroids;
}

}  // namespace

std::size_t nearest_centroid(const Matrix& centroids, const Eigen::Ref<const RowVector>& point) {
  if (centroids.rows() == 0) throw std::invalid_argument("nearest_centroid: no centroids");
  std::size_t best = 0;
  double best_d = squared_distance(centroids.row(0), point);
  for (Eigen::Index c = 1; c < centroids.rows(); ++c) {
    const double d = squared_distance(centroids.row(c), point);
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(c);
    }
  }
  return best;
}

std::vector<std::size_t> assign_all(const Matrix& centroids, const Matrix& points) {
  std::vector<std::size_t> out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) out[i] = nearest_centroid(centroids, points.row(i));
  return out;
}

double inertia(const Matrix& points, const Matrix& centroids,
               const std::vector<std::size_t>& assignments) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    acc += squared_distance(points.row(i), centroids.row(assignments[i]));
  }
  return acc;
}

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options) {
  if (k == 0) throw std::invalid_argument("kmeans: k must be at least 1");
  if (static_cast<std::size_t>(points.rows()) < k) {
    throw std::invalid_argument("kmeans: " + std::to_string(points.rows()) +
                                " points cannot form " + std::to_string(k) + " clusters");
  }
  const auto n = static_cast<std::size_t>(points.rows());
  Rng rng(seed);

  KMeansResult result;
  result.centroids = seed_plus_plus(points, k, rng);
  result.assignments = assign_all(result.centroids, points);
  result.inertia_trace.push_back(inertia(points, result.centroids, result.assignments));

  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(result.assignments[i]) += points.row(i);
      ++counts[result.assignments[i]];
    }

    Matrix updated = result.centroids;
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        updated.row(c) = sums.row(c) / static_cast<double>(counts[c]);
        continue;
      }
      // Re-seed from the point worst served by its current centroid.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i]) continue;
        const double d = squared_distance(points.row(i), result.centroids.row(result.assignments[i]));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      taken[far] = true;
      updated.row(c) = points.row(far);
    }

    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      shift = std::max(shift, std::sqrt(squared_distance(updated.row(c), result.centroids.row(c))));
    }
    result.centroids = std::move(updated);
    result.assignments = assign_all(result.centroids, points);
    result.inertia_trace.push_back(inertia(points, result.centroids, result.assignments));
    result.iterations = iter + 1;
    if (shift < options.tol) break;
  }
  return result;
}

}  // namespace bmnet::clustering
