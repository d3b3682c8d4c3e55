#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bmnet/types.hpp"

namespace bmnet::clustering {

struct KMeansOptions {
  std::size_t max_iter = 200;
  double tol = 1e-8;  // stop once no centroid moves farther than this
};

struct KMeansResult {
  Matrix centroids;                      // k x d
  std::vector<std::size_t> assignments;  // one per input row
  std::vector<double> inertia_trace;     // within-cluster sum of squares after each assignment
  std::size_t iterations = 0;
};

// Lloyd iterations from k-means++ seeding. Empty clusters are re-seeded with
// the point farthest from its current centroid.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options = {});

// Euclidean argmin over rows of `centroids`; ties go to the lowest index.
std::size_t nearest_centroid(const Matrix& centroids, const Eigen::Ref<const RowVector>& point);

std::vector<std::size_t> assign_all(const Matrix& centroids, const Matrix& points);

double inertia(const Matrix& points, const Matrix& centroids,
               const std::vector<std::size_t>& assignments);

// The conditioning neighborhoods for both sides of the training data.
struct ClusterModel {
  Matrix centroids_x;  // n1 x 3
  Matrix centroids_y;  // n2 x 2

  std::size_t n1() const { return static_cast<std::size_t>(centroids_x.rows()); }
  std::size_t n2() const { return static_cast<std::size_t>(centroids_y.rows()); }
};

}  // namespace bmnet::clustering
