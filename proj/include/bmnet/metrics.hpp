#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bmnet/datasets.hpp"
#include "bmnet/training.hpp"
#include "bmnet/types.hpp"

namespace bmnet::metrics {

enum class WassersteinMode { Exact, Sliced };
std::string to_string(WassersteinMode mode);

struct WassersteinOptions {
  std::size_t exact_limit = 512;  // exact assignment when |A| = |B| <= this
  std::size_t slices = 128;
  std::uint64_t slice_seed = 0x51ced;
};

struct WassersteinResult {
  double value = 0.0;
  WassersteinMode mode = WassersteinMode::Exact;
};

// Empirical p-Wasserstein distance (p in {1, 2}) between the rows of a and b.
WassersteinResult wasserstein_detailed(const Matrix& a, const Matrix& b, int p,
                                       const WassersteinOptions& options = {});
double wasserstein(const Matrix& a, const Matrix& b, int p, const WassersteinOptions& options = {});

// Forced modes, used directly by tests.
double wasserstein_exact(const Matrix& a, const Matrix& b, int p);
double wasserstein_sliced(const Matrix& a, const Matrix& b, int p, std::size_t slices, std::uint64_t seed);
// Exact 1-D p-Wasserstein cost (W_p^p) between two samples of any sizes.
double wasserstein_1d_cost(std::vector<double> a, std::vector<double> b, int p);

// Minimum-cost perfect matching on a square cost matrix (Hungarian method).
// Returns the column assigned to each row.
std::vector<std::size_t> solve_assignment(const Matrix& cost);

double msmd(const Matrix& a, const Matrix& b);

// Median of all pairwise distances among the rows of `points`.
double median_pairwise_distance(const Matrix& points);

// Biased squared-MMD with a Gaussian kernel at the median-heuristic bandwidth.
double mmd(const Matrix& a, const Matrix& b);

// k-NN estimate of KL(P || Q) from samples a ~ P and b ~ Q.
double knn_kl(const Matrix& a, const Matrix& b, std::size_t k = 5);

struct MetricValues {
  double w1 = 0.0;
  double w2 = 0.0;
  double msmd = 0.0;
  double mmd = 0.0;
  double kl_fwd = 0.0;
  double kl_bwd = 0.0;
};

struct MetricModes {
  WassersteinMode w1 = WassersteinMode::Exact;
  WassersteinMode w2 = WassersteinMode::Exact;
};

MetricValues compare(const Matrix& generated, const Matrix& truth, std::size_t knn_k,
                     const WassersteinOptions& options, MetricModes* modes = nullptr);

struct Protocol {
  std::size_t global_points = 5000;
  std::size_t local_anchors = 15;
  std::size_t local_points = 200;
  std::size_t knn_k = 5;
  std::uint64_t seed = 0;
  WassersteinOptions wasserstein;
};

struct LevelReport {
  MetricValues values;  // per-anchor mean at the local level
  MetricModes modes;
  std::vector<MetricValues> per_anchor;
  Matrix anchors;
};

struct DirectionReport {
  LevelReport global;
  LevelReport local;
};

struct MetricReport {
  datasets::DatasetId dataset = datasets::DatasetId::Torus1;
  Protocol protocol;
  std::size_t inference_k = 0;
  DirectionReport forward;
  DirectionReport reverse;
};

// Samples kept for external plotting.
struct DirectionSamples {
  Matrix global_generated, global_true;
  std::vector<Matrix> local_generated, local_true;
};
struct EvaluationSamples {
  DirectionSamples forward, reverse;
};

// Draws `per_anchor` conditional samples for every anchor row (anchor-major).
using AnchorSampler = std::function<Matrix(const Matrix& anchors, std::size_t per_anchor, std::uint64_t seed)>;
struct ConditionalSampler {
  AnchorSampler forward;
  AnchorSampler reverse;
  std::size_t inference_k = 0;
};

ConditionalSampler model_sampler(const training::TrainedModel& model, std::size_t k);
// The exact conditional laws of the dataset, for calibrating the protocol.
ConditionalSampler oracle_sampler(datasets::DatasetId id);

MetricReport evaluate(const ConditionalSampler& sampler, datasets::DatasetId id, const Protocol& protocol,
                      EvaluationSamples* samples = nullptr);

}  // namespace bmnet::metrics
