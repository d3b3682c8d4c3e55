#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bmnet/rng.hpp"
#include "bmnet/types.hpp"

namespace bmnet::datasets {

enum class DatasetId { Torus1, Torus2, Mobius };

// Shape constants shared by all three datasets.
inline constexpr double kMajorRadius = 1.0;
inline constexpr double kMinorRadius = 0.25;
// Anchors farther than this from their manifold are rejected by the oracle.
inline constexpr double kAnchorTolerance = 1e-6;

enum class Direction { Forward, Reverse };
enum class Side { X, Y };

struct PairedSample {
  Eigen::Vector3d x;
  Eigen::Vector2d y;
};

struct Dataset {
  DatasetId id = DatasetId::Torus1;
  std::vector<PairedSample> pairs;
  std::uint64_t seed = 0;

  std::size_t size() const { return pairs.size(); }
  Matrix xs() const;  // n x 3
  Matrix ys() const;  // n x 2
};

std::string to_string(DatasetId id);
DatasetId parse_dataset_id(std::string_view name);

// Point on the torus for tube angle `theta` and revolution angle `phi`.
Eigen::Vector3d torus_point(double theta, double phi);
// Point on the Moebius band for angle `theta` and band offset `s`.
Eigen::Vector3d mobius_point(double theta, double s);
Eigen::Vector2d circle_point(double angle);

PairedSample sample_pair(DatasetId id, Rng& rng);

// n >= 1 independent pairs; deterministic in seed.
Dataset generate_dataset(DatasetId id, std::size_t n, std::uint64_t seed);

// Exact draws from f(anchor) (forward, anchor in R^3) or the fiber
// f^-1(anchor) (reverse, anchor in R^2). Rows are points.
Matrix conditional_oracle(DatasetId id, Direction direction, const Eigen::VectorXd& anchor,
                          std::size_t n, Rng& rng);

// Zero iff `point` satisfies the implicit equation of the named side.
double manifold_residual(DatasetId id, const Eigen::VectorXd& point, Side side);

}  // namespace bmnet::datasets
