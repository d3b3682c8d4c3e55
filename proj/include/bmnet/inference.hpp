#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bmnet/training.hpp"

namespace bmnet::inference {

struct InferenceConfig {
  std::size_t k = 50;  // neighborhood size in the training set
  std::size_t n = 1;   // samples per anchor
  std::uint64_t seed = 0;
};

// Indices of the k training rows nearest to `query`; ties go to the lower index.
std::vector<std::size_t> nearest_neighbors(const Matrix& points, const Eigen::Ref<const RowVector>& query,
                                           std::size_t k);

// cfg.n samples of f(x), one per row.
Matrix sample_forward(const training::TrainedModel& model, const Eigen::Vector3d& x,
                      const InferenceConfig& cfg);
// cfg.n samples of the fiber f^-1(y), one per row.
Matrix sample_reverse(const training::TrainedModel& model, const Eigen::Vector2d& y,
                      const InferenceConfig& cfg);

// Multi-anchor variants sharing one generator; output rows are anchor-major
// (cfg.n consecutive rows per anchor). A single anchor gives the same draws
// as the single-anchor overloads.
Matrix sample_forward(const training::TrainedModel& model, const Matrix& anchors,
                      const InferenceConfig& cfg);
Matrix sample_reverse(const training::TrainedModel& model, const Matrix& anchors,
                      const InferenceConfig& cfg);

}  // namespace bmnet::inference
