#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "bmnet/metrics.hpp"

using namespace bmnet;
using namespace bmnet::metrics;

namespace {

Matrix normal_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double shift = 0.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() + shift;
  return m;
}

// Minimum over all bijections of the mean cost, raised to 1/p.
double enumerate_wasserstein(const Matrix& a, const Matrix& b, int p) {
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(a.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      cost += std::pow((a.row(i) - b.row(perm[static_cast<std::size_t>(i)])).norm(), p);
    }
    best = std::min(best, cost / static_cast<double>(a.rows()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(best, 1.0 / p);
}

}  // namespace

TEST(Wasserstein, Examples) {
  Matrix a(1, 1), b(1, 1);
  a << 0;
  b << 1;
  EXPECT_NEAR(wasserstein(a, b, 1), 1.0, 1e-15);
  Matrix c(2, 2), d(2, 2);
  c << 0, 0, 1, 1;
  d << 1, 0, 0, 1;
  EXPECT_NEAR(wasserstein(c, d, 1), 1.0, 1e-15);
  EXPECT_EQ(wasserstein(c, c, 2), 0.0);
}

TEST(Wasserstein, ExactMatchesPermutationEnumeration) {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng.index(6));
    const auto dim = static_cast<Eigen::Index>(1 + rng.index(3));
    const Matrix a = normal_matrix(n, dim, rng), b = normal_matrix(n, dim, rng, 0.5);
    for (int p : {1, 2}) {
      EXPECT_NEAR(wasserstein(a, b, p), enumerate_wasserstein(a, b, p), 1e-9) << "trial " << trial;
    }
  }
}

TEST(Wasserstein, AssignmentIsPermutation) {
  Rng rng(32);
  const Matrix cost = normal_matrix(40, 40, rng).cwiseAbs();
  auto assignment = solve_assignment(cost);
  std::sort(assignment.begin(), assignment.end());
  for (std::size_t i = 0; i < assignment.size(); ++i) EXPECT_EQ(assignment[i], i);
}

TEST(Wasserstein, OneDimensionalCost) {
  EXPECT_NEAR(wasserstein_1d_cost({0, 1, 2}, {1, 2, 3}, 1), 1.0, 1e-15);
  EXPECT_NEAR(wasserstein_1d_cost({0, 0}, {0, 1, 2, 3}, 2), (0 + 1 + 4 + 9) / 4.0, 1e-15);
}

TEST(Wasserstein, SlicedModeAboveLimit) {
  Rng rng(33);
  const Matrix a = normal_matrix(600, 2, rng), b = normal_matrix(600, 2, rng, 1.0);
  const auto result = wasserstein_detailed(a, b, 1);
  EXPECT_EQ(result.mode, WassersteinMode::Sliced);
  EXPECT_GT(result.value, 0.3);
  EXPECT_LT(result.value, 1.5);
  EXPECT_EQ(wasserstein_detailed(a.topRows(100), b.topRows(100), 1).mode, WassersteinMode::Exact);
  EXPECT_EQ(wasserstein_detailed(a.topRows(100), b.topRows(90), 1).mode, WassersteinMode::Sliced);
  EXPECT_EQ(wasserstein(a, b, 2), wasserstein(a, b, 2));
}

TEST(Wasserstein, SlicedOneDimensionIsExact) {
  Rng rng(34);
  const Matrix a = normal_matrix(30, 1, rng), b = normal_matrix(30, 1, rng, 0.3);
  EXPECT_NEAR(wasserstein_sliced(a, b, 1, 16, 1), wasserstein_exact(a, b, 1), 1e-12);
}

TEST(Msmd, ExamplesAndTranslation) {
  Matrix a(1, 2), b(2, 2);
  a << 0, 0;
  b << 1, 0, 0, 2;
  EXPECT_NEAR(msmd(a, b), 3.5, 1e-15);
  EXPECT_EQ(msmd(b, b), 0.0);
  Rng rng(35);
  const Matrix c = normal_matrix(20, 3, rng), d = normal_matrix(25, 3, rng);
  const RowVector t = normal_matrix(1, 3, rng);
  EXPECT_NEAR(msmd(c.rowwise() + t, d.rowwise() + t), msmd(c, d), 1e-12);
}

TEST(Mmd, IdentityNullAndSeparation) {
  Rng rng(36);
  const Matrix a = normal_matrix(2000, 1, rng), b = normal_matrix(2000, 1, rng), c = normal_matrix(2000, 1, rng, 3.0);
  EXPECT_EQ(mmd(a, a), 0.0);
  EXPECT_LE(mmd(a, b), 0.01);
  EXPECT_GE(mmd(a, c), 0.1);
}

TEST(Mmd, DegenerateSetsUseBandwidthFloor) {
  const Matrix a = Matrix::Zero(5, 2);
  EXPECT_EQ(mmd(a, a), 0.0);
  EXPECT_TRUE(std::isfinite(mmd(a, Matrix::Constant(5, 2, 1.0))));
}

TEST(MedianDistance, SmallSet) {
  Matrix p(3, 1);
  p << 0, 1, 3;
  EXPECT_DOUBLE_EQ(median_pairwise_distance(p), 2.0);
}

TEST(KnnKl, GaussianOracles) {
  Rng rng(37);
  const Matrix a = normal_matrix(5000, 1, rng), b = normal_matrix(5000, 1, rng), c = normal_matrix(5000, 1, rng, 1.0);
  EXPECT_LE(std::abs(knn_kl(a, b)), 0.1);
  EXPECT_NEAR(knn_kl(a, c), 0.5, 0.15);
}

TEST(KnnKl, Preconditions) {
  const Matrix a = Matrix::Zero(5, 2);
  EXPECT_THROW(knn_kl(a, Matrix::Zero(10, 2), 5), std::invalid_argument);
  EXPECT_THROW(knn_kl(Matrix::Zero(10, 2), a, 5), std::invalid_argument);
  EXPECT_THROW(knn_kl(a, a, 0), std::invalid_argument);
  EXPECT_TRUE(std::isfinite(knn_kl(Matrix::Zero(10, 2), Matrix::Zero(10, 2), 3)));
}

TEST(Evaluate, OracleAgainstItself) {
  Protocol protocol;
  protocol.seed = 3;
  const auto report = evaluate(oracle_sampler(datasets::DatasetId::Torus1), datasets::DatasetId::Torus1, protocol);
  EXPECT_LE(report.forward.global.values.w1, 0.02);
  EXPECT_EQ(report.protocol.global_points, 5000u);
  EXPECT_EQ(report.protocol.local_anchors, 15u);
  EXPECT_EQ(report.protocol.local_points, 200u);
  EXPECT_EQ(report.forward.local.per_anchor.size(), 15u);
  EXPECT_EQ(report.reverse.local.anchors.rows(), 15);
  EXPECT_EQ(report.reverse.local.anchors.cols(), 2);
}

TEST(Evaluate, DeterministicInSeed) {
  Protocol protocol;
  protocol.global_points = 300;
  protocol.local_anchors = 3;
  protocol.local_points = 50;
  protocol.seed = 4;
  const auto sampler = oracle_sampler(datasets::DatasetId::Mobius);
  EvaluationSamples s1, s2;
  const auto a = evaluate(sampler, datasets::DatasetId::Mobius, protocol, &s1);
  const auto b = evaluate(sampler, datasets::DatasetId::Mobius, protocol, &s2);
  EXPECT_EQ(a.forward.global.values.w1, b.forward.global.values.w1);
  EXPECT_EQ(a.reverse.local.values.kl_fwd, b.reverse.local.values.kl_fwd);
  EXPECT_EQ(s1.forward.global_generated, s2.forward.global_generated);
  EXPECT_EQ(s1.reverse.local_true.size(), 3u);
}
