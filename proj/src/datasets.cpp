#include "bmnet/datasets.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bmnet::datasets {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kQuarterPi = std::numbers::pi / 4.0;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

double torus_residual(const Eigen::Vector3d& x) {
  const double ring = std::hypot(x[0], x[1]) - kMajorRadius;
  return std::abs(ring * ring + x[2] * x[2] - kMinorRadius * kMinorRadius);
}

// The azimuth of a band point is its parameter angle, since R - s cos(theta/2) > 0.
// Within that meridian plane the band is a segment of half-length r through
// (R, 0) with direction (-cos(theta/2), sin(theta/2)).
double mobius_residual(const Eigen::Vector3d& x) {
  const double theta = std::atan2(x[1], x[0]);
  const double radial = kMajorRadius - std::hypot(x[0], x[1]);
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  const double along = radial * c + x[2] * s;
  const double across = std::abs(radial * s - x[2] * c);
  return across + std::max(0.0, std::abs(along) - kMinorRadius);
}

void require_on_manifold(DatasetId id, const Eigen::VectorXd& anchor, Side side) {
  const double residual = manifold_residual(id, anchor, side);
  if (!(residual <= kAnchorTolerance)) {
    throw std::invalid_argument("conditional_oracle: anchor is off the " +
                                std::string(side == Side::X ? "input" : "output") +
                                " manifold (residual " + std::to_string(residual) + ")");
  }
}

}  // namespace

Matrix Dataset::xs() const {
  Matrix m(pairs.size(), 3);
  for (std::size_t i = 0; i < pairs.size(); ++i) m.row(i) = pairs[i].x.transpose();
  return m;
}

Matrix Dataset::ys() const {
  Matrix m(pairs.size(), 2);
  for (std::size_t i = 0; i < pairs.size(); ++i) m.row(i) = pairs[i].y.transpose();
  return m;
}

std::string to_string(DatasetId id) {
  switch (id) {
    case DatasetId::Torus1: return "torus1";
    case DatasetId::Torus2: return "torus2";
    case DatasetId::Mobius: return "mobius";
  }
  return "unknown";
}

DatasetId parse_dataset_id(std::string_view name) {
  if (name == "torus1") return DatasetId::Torus1;
  if (name == "torus2") return DatasetId::Torus2;
  if (name == "mobius") return DatasetId::Mobius;
  throw std::invalid_argument("unknown dataset '" + std::string(name) +
                              "' (expected torus1, torus2 or mobius)");
}

Eigen::Vector3d torus_point(double theta, double phi) {
  const double ring = kMajorRadius + kMinorRadius * std::cos(theta);
  return {ring * std::cos(phi), ring * std::sin(phi), kMinorRadius * std::sin(theta)};
}

Eigen::Vector3d mobius_point(double theta, double s) {
  const double half = std::cos(theta / 2.0);
  return {kMajorRadius * std::cos(theta) - s * half * std::cos(theta),
          kMajorRadius * std::sin(theta) - s * half * std::sin(theta), s * std::sin(theta / 2.0)};
}

Eigen::Vector2d circle_point(double angle) { return {std::cos(angle), std::sin(angle)}; }

PairedSample sample_pair(DatasetId id, Rng& rng) {
  switch (id) {
    case DatasetId::Torus1: {
      const double theta = rng.uniform(0.0, kTwoPi);
      const double phi = rng.uniform(0.0, kTwoPi);
      const double alpha = rng.uniform(-kQuarterPi, kQuarterPi);
      return {torus_point(theta, phi), circle_point(phi + alpha)};
    }
    case DatasetId::Torus2: {
      const double theta = rng.uniform(0.0, kTwoPi);
      const double phi = rng.uniform(0.0, kTwoPi);
      const double branch = rng.coin() ? kPi : 0.0;
      return {torus_point(theta, phi), circle_point(phi / 2.0 + branch)};
    }
    case DatasetId::Mobius: {
      const double theta = rng.uniform(0.0, kTwoPi);
      const double s = rng.uniform(-kMinorRadius, kMinorRadius);
      const double alpha = rng.uniform(-kQuarterPi, kQuarterPi);
      return {mobius_point(theta, s), circle_point(theta + alpha)};
    }
  }
  throw std::logic_error("sample_pair: bad dataset id");
}

Dataset generate_dataset(DatasetId id, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("generate_dataset: n must be at least 1");
  Dataset ds;
  ds.id = id;
  ds.seed = seed;
  ds.pairs.reserve(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) ds.pairs.push_back(sample_pair(id, rng));
  return ds;
}

Matrix conditional_oracle(DatasetId id, Direction direction, const Eigen::VectorXd& anchor,
                          std::size_t n, Rng& rng) {
  if (direction == Direction::Forward) {
    if (anchor.size() != 3) throw std::invalid_argument("conditional_oracle: forward anchor must be 3-D");
    require_on_manifold(id, anchor, Side::X);
    // Torus revolution angle, or the Moebius parameter angle; both are the azimuth.
    const double azimuth = std::atan2(anchor[1], anchor[0]);
    Matrix out(n, 2);
    for (std::size_t k = 0; k < n; ++k) {
      double angle;
      if (id == DatasetId::Torus2) {
        angle = wrap_angle(azimuth) / 2.0 + (rng.coin() ? kPi : 0.0);
      } else {
        angle = azimuth + rng.uniform(-kQuarterPi, kQuarterPi);
      }
      out.row(k) = circle_point(angle).transpose();
    }
    return out;
  }

  if (anchor.size() != 2) throw std::invalid_argument("conditional_oracle: reverse anchor must be 2-D");
  require_on_manifold(id, anchor, Side::Y);
  const double psi = std::atan2(anchor[1], anchor[0]);
  Matrix out(n, 3);
  for (std::size_t k = 0; k < n; ++k) {
    Eigen::Vector3d x;
    switch (id) {
      case DatasetId::Torus1: {
        const double phi = psi + rng.uniform(-kQuarterPi, kQuarterPi);
        x = torus_point(rng.uniform(0.0, kTwoPi), phi);
        break;
      }
      case DatasetId::Torus2:
        // Both branches psi = phi/2 and psi = phi/2 + pi give phi = 2 psi mod 2 pi.
        x = torus_point(rng.uniform(0.0, kTwoPi), wrap_angle(2.0 * psi));
        break;
      case DatasetId::Mobius: {
        const double theta = psi + rng.uniform(-kQuarterPi, kQuarterPi);
        x = mobius_point(theta, rng.uniform(-kMinorRadius, kMinorRadius));
        break;
      }
    }
    out.row(k) = x.transpose();
  }
  return out;
}

double manifold_residual(DatasetId id, const Eigen::VectorXd& point, Side side) {
  if (side == Side::Y) {
    if (point.size() != 2) throw std::invalid_argument("manifold_residual: y point must be 2-D");
    return std::abs(point.norm() - 1.0);
  }
  if (point.size() != 3) throw std::invalid_argument("manifold_residual: x point must be 3-D");
  const Eigen::Vector3d x = point;
  return id == DatasetId::Mobius ? mobius_residual(x) : torus_residual(x);
}

}  // namespace bmnet::datasets
