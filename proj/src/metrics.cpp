#include "bmnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bmnet/inference.hpp"
#include "bmnet/rng.hpp"
#include "bmnet/tape.hpp"

namespace bmnet::metrics {
namespace {

void check_sets(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument(std::string(what) + ": empty point set");
  if (a.cols() != b.cols()) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

double distance(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    const double d = a(i, k) - b(j, k);
    acc += d * d;
  }
  return std::sqrt(acc);
}

double ground_cost(double dist, int p) { return p == 1 ? dist : dist * dist; }

void check_order(int p) {
  if (p != 1 && p != 2) throw std::invalid_argument("wasserstein: order must be 1 or 2");
}

double root(double cost, int p) { return p == 1 ? cost : std::sqrt(std::max(0.0, cost)); }

// k smallest values kept in ascending order.
class TopK {
 public:
  explicit TopK(std::size_t k) : values_(k, std::numeric_limits<double>::infinity()) {}
  void push(double v) {
    if (v >= values_.back()) return;
    std::size_t pos = values_.size() - 1;
    while (pos > 0 && values_[pos - 1] > v) {
      values_[pos] = values_[pos - 1];
      --pos;
    }
    values_[pos] = v;
  }
  double kth() const { return values_.back(); }

 private:
  std::vector<double> values_;
};

constexpr double kDistanceFloor = 1e-12;
constexpr double kBandwidthFloor = 1e-6;

}  // namespace

std::string to_string(WassersteinMode mode) { return mode == WassersteinMode::Exact ? "exact" : "sliced"; }

std::vector<std::size_t> solve_assignment(const Matrix& cost) {
  if (cost.rows() != cost.cols()) throw std::invalid_argument("solve_assignment: cost matrix must be square");
  const auto n = static_cast<std::size_t>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  // Potentials and matching are 1-based; column 0 is a sentinel.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[match[j] - 1] = j - 1;
  return assignment;
}

double wasserstein_exact(const Matrix& a, const Matrix& b, int p) {
  check_sets(a, b, "wasserstein");
  check_order(p);
  if (a.rows() != b.rows()) throw std::invalid_argument("wasserstein_exact: sets must have equal size");
  const Eigen::Index n = a.rows();
  Matrix cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = ground_cost(distance(a, i, b, j), p);
  }
  const auto assignment = solve_assignment(cost);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += cost(i, static_cast<Eigen::Index>(assignment[i]));
  return root(total / static_cast<double>(n), p);
}

double wasserstein_1d_cost(std::vector<double> a, std::vector<double> b, int p) {
  check_order(p);
  if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein_1d_cost: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Quantile matching with integer masses: each a-point carries |b| units,
  // each b-point |a| units, so both sides total |a||b|.
  const std::size_t n = a.size(), m = b.size();
  std::size_t i = 0, j = 0, left_a = m, left_b = n;
  double total = 0.0;
  while (i < n && j < m) {
    const std::size_t step = std::min(left_a, left_b);
    total += static_cast<double>(step) * ground_cost(std::abs(a[i] - b[j]), p);
    left_a -= step;
    left_b -= step;
    if (left_a == 0) {
      ++i;
      left_a = m;
    }
    if (left_b == 0) {
      ++j;
      left_b = n;
    }
  }
  return total / (static_cast<double>(n) * static_cast<double>(m));
}

double wasserstein_sliced(const Matrix& a, const Matrix& b, int p, std::size_t slices, std::uint64_t seed) {
  check_sets(a, b, "wasserstein");
  check_order(p);
  if (slices == 0) throw std::invalid_argument("wasserstein_sliced: need at least one slice");
  Rng rng(seed);
  const Eigen::Index d = a.cols();
  double total = 0.0;
  for (std::size_t s = 0; s < slices; ++s) {
    Eigen::VectorXd dir(d);
    do {
      for (Eigen::Index k = 0; k < d; ++k) dir[k] = rng.normal();
    } while (dir.norm() == 0.0);
    dir.normalize();
    const Eigen::VectorXd pa = a * dir;
    const Eigen::VectorXd pb = b * dir;
    total += wasserstein_1d_cost(std::vector<double>(pa.data(), pa.data() + pa.size()),
                                 std::vector<double>(pb.data(), pb.data() + pb.size()), p);
  }
  return root(total / static_cast<double>(slices), p);
}

WassersteinResult wasserstein_detailed(const Matrix& a, const Matrix& b, int p, const WassersteinOptions& options) {
  check_sets(a, b, "wasserstein");
  check_order(p);
  const auto smaller = static_cast<std::size_t>(std::min(a.rows(), b.rows()));
  if (a.rows() == b.rows() && smaller <= options.exact_limit) {
    return {wasserstein_exact(a, b, p), WassersteinMode::Exact};
  }
  return {wasserstein_sliced(a, b, p, options.slices, options.slice_seed), WassersteinMode::Sliced};
}

double wasserstein(const Matrix& a, const Matrix& b, int p, const WassersteinOptions& options) {
  return wasserstein_detailed(a, b, p, options).value;
}

double msmd(const Matrix& a, const Matrix& b) {
  check_sets(a, b, "msmd");
  return numerics::chamfer_distance(a, b);
}

double median_pairwise_distance(const Matrix& points) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (n < 2) return 0.0;
  const std::size_t pairs = n * (n - 1) / 2;
  const std::size_t lo_rank = (pairs - 1) / 2, hi_rank = pairs / 2;

  auto for_each_pair = [&](auto&& visit) {
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < points.rows(); ++j) visit(distance(points, i, points, j));
    }
  };
  auto median_of = [&](std::vector<double>& values, std::size_t lo, std::size_t hi) {
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
    const double a = values[lo];
    double b = a;
    if (hi != lo) b = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
    return 0.5 * (a + b);
  };

  if (pairs <= (std::size_t{1} << 22)) {
    std::vector<double> all;
    all.reserve(pairs);
    for_each_pair([&](double d) { all.push_back(d); });
    return median_of(all, lo_rank, hi_rank);
  }

  // Large inputs: histogram the distances, then select exactly inside the
  // bins that hold the two middle ranks.
  double max_d = 0.0;
  for_each_pair([&](double d) { max_d = std::max(max_d, d); });
  if (max_d == 0.0) return 0.0;
  constexpr std::size_t kBins = std::size_t{1} << 16;
  auto bin_of = [&](double d) {
    return std::min(kBins - 1, static_cast<std::size_t>(d / max_d * static_cast<double>(kBins)));
  };
  std::vector<std::size_t> counts(kBins, 0);
  for_each_pair([&](double d) { ++counts[bin_of(d)]; });
  std::size_t below = 0, first_bin = 0;
  while (below + counts[first_bin] <= lo_rank) below += counts[first_bin++];
  std::size_t last_bin = first_bin, through = below + counts[first_bin];
  while (through <= hi_rank) through += counts[++last_bin];
  std::vector<double> window;
  for_each_pair([&](double d) {
    const std::size_t b = bin_of(d);
    if (b >= first_bin && b <= last_bin) window.push_back(d);
  });
  return median_of(window, lo_rank - below, hi_rank - below);
}

double mmd(const Matrix& a, const Matrix& b) {
  check_sets(a, b, "mmd");
  Matrix all(a.rows() + b.rows(), a.cols());
  all << a, b;
  const double sigma = std::max(kBandwidthFloor, median_pairwise_distance(all));
  const double gamma = 1.0 / (2.0 * sigma * sigma);
  auto mean_kernel = [&](const Matrix& u, const Matrix& v) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      double row = 0.0;
      for (Eigen::Index j = 0; j < v.rows(); ++j) {
        const double d = distance(u, i, v, j);
        row += std::exp(-gamma * d * d);
      }
      total += row;
    }
    return total / (static_cast<double>(u.rows()) * static_cast<double>(v.rows()));
  };
  const double value = mean_kernel(a, a) + mean_kernel(b, b) - 2.0 * mean_kernel(a, b);
  return std::max(0.0, value);
}

double knn_kl(const Matrix& a, const Matrix& b, std::size_t k) {
  check_sets(a, b, "knn_kl");
  const auto n = static_cast<std::size_t>(a.rows());
  const auto m = static_cast<std::size_t>(b.rows());
  if (k == 0 || k >= n || k >= m) {
    throw std::invalid_argument("knn_kl: need more than k = " + std::to_string(k) + " samples in each set");
  }
  double log_ratio = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    TopK within(k), across(k);
    for (Eigen::Index j = 0; j < a.rows(); ++j) {
      if (j != i) within.push(distance(a, i, a, j));
    }
    for (Eigen::Index j = 0; j < b.rows(); ++j) across.push(distance(a, i, b, j));
    log_ratio += std::log(std::max(across.kth(), kDistanceFloor) / std::max(within.kth(), kDistanceFloor));
  }
  const double d = static_cast<double>(a.cols());
  return d / static_cast<double>(n) * log_ratio + std::log(static_cast<double>(m) / static_cast<double>(n - 1));
}

MetricValues compare(const Matrix& generated, const Matrix& truth, std::size_t knn_k,
                     const WassersteinOptions& options, MetricModes* modes) {
  MetricValues v;
  const WassersteinResult w1 = wasserstein_detailed(generated, truth, 1, options);
  const WassersteinResult w2 = wasserstein_detailed(generated, truth, 2, options);
  v.w1 = w1.value;
  v.w2 = w2.value;
  if (modes) *modes = MetricModes{w1.mode, w2.mode};
  v.msmd = msmd(generated, truth);
  v.mmd = mmd(generated, truth);
  v.kl_fwd = knn_kl(generated, truth, knn_k);
  v.kl_bwd = knn_kl(truth, generated, knn_k);
  return v;
}

ConditionalSampler model_sampler(const training::TrainedModel& model, std::size_t k) {
  ConditionalSampler s;
  s.inference_k = k;
  s.forward = [&model, k](const Matrix& anchors, std::size_t per_anchor, std::uint64_t seed) {
    return inference::sample_forward(model, anchors, inference::InferenceConfig{k, per_anchor, seed});
  };
  s.reverse = [&model, k](const Matrix& anchors, std::size_t per_anchor, std::uint64_t seed) {
    return inference::sample_reverse(model, anchors, inference::InferenceConfig{k, per_anchor, seed});
  };
  return s;
}

ConditionalSampler oracle_sampler(datasets::DatasetId id) {
  auto make = [id](datasets::Direction direction) {
    return [id, direction](const Matrix& anchors, std::size_t per_anchor, std::uint64_t seed) {
      Rng rng(seed);
      const Eigen::Index out_dim = direction == datasets::Direction::Forward ? 2 : 3;
      Matrix out(anchors.rows() * static_cast<Eigen::Index>(per_anchor), out_dim);
      for (Eigen::Index a = 0; a < anchors.rows(); ++a) {
        const Eigen::VectorXd anchor = anchors.row(a).transpose();
        out.middleRows(a * static_cast<Eigen::Index>(per_anchor), static_cast<Eigen::Index>(per_anchor)) =
            datasets::conditional_oracle(id, direction, anchor, per_anchor, rng);
      }
      return out;
    };
  };
  ConditionalSampler s;
  s.forward = make(datasets::Direction::Forward);
  s.reverse = make(datasets::Direction::Reverse);
  return s;
}

namespace {

enum Stream : std::uint64_t {
  kGlobalAnchors = 0,
  kGlobalTruth,
  kGlobalForwardModel,
  kGlobalReverseModel,
  kLocalForwardAnchors,
  kLocalReverseAnchors,
  kLocalForwardOracle,
  kLocalReverseOracle,
  kLocalForwardModel,
  kLocalReverseModel,
};

MetricValues mean_of(const std::vector<MetricValues>& values) {
  MetricValues m;
  for (const auto& v : values) {
    m.w1 += v.w1;
    m.w2 += v.w2;
    m.msmd += v.msmd;
    m.mmd += v.mmd;
    m.kl_fwd += v.kl_fwd;
    m.kl_bwd += v.kl_bwd;
  }
  const double n = static_cast<double>(values.size());
  m.w1 /= n;
  m.w2 /= n;
  m.msmd /= n;
  m.mmd /= n;
  m.kl_fwd /= n;
  m.kl_bwd /= n;
  return m;
}

DirectionReport evaluate_direction(const AnchorSampler& sampler, datasets::DatasetId id, const Protocol& protocol,
                                   bool forward_direction, DirectionSamples* samples) {
  const std::uint64_t seed = protocol.seed;
  const auto direction = forward_direction ? datasets::Direction::Forward : datasets::Direction::Reverse;
  auto source = [&](const datasets::Dataset& d) { return forward_direction ? d.xs() : d.ys(); };
  auto target = [&](const datasets::Dataset& d) { return forward_direction ? d.ys() : d.xs(); };

  DirectionReport report;

  const auto anchor_pairs = datasets::generate_dataset(id, protocol.global_points, derive_seed(seed, kGlobalAnchors));
  const auto true_pairs = datasets::generate_dataset(id, protocol.global_points, derive_seed(seed, kGlobalTruth));
  const Matrix global_anchors = source(anchor_pairs);
  const Matrix global_true = target(true_pairs);
  const Matrix global_generated =
      sampler(global_anchors, 1, derive_seed(seed, forward_direction ? kGlobalForwardModel : kGlobalReverseModel));
  report.global.values =
      compare(global_generated, global_true, protocol.knn_k, protocol.wasserstein, &report.global.modes);
  report.global.per_anchor = {};

  const auto local_pairs = datasets::generate_dataset(
      id, protocol.local_anchors, derive_seed(seed, forward_direction ? kLocalForwardAnchors : kLocalReverseAnchors));
  report.local.anchors = source(local_pairs);
  const Matrix local_generated = sampler(report.local.anchors, protocol.local_points,
                                         derive_seed(seed, forward_direction ? kLocalForwardModel : kLocalReverseModel));
  Rng oracle_rng(derive_seed(seed, forward_direction ? kLocalForwardOracle : kLocalReverseOracle));
  const auto per = static_cast<Eigen::Index>(protocol.local_points);
  for (Eigen::Index a = 0; a < report.local.anchors.rows(); ++a) {
    const Eigen::VectorXd anchor = report.local.anchors.row(a).transpose();
    const Matrix truth = datasets::conditional_oracle(id, direction, anchor, protocol.local_points, oracle_rng);
    const Matrix generated = local_generated.middleRows(a * per, per);
    report.local.per_anchor.push_back(
        compare(generated, truth, protocol.knn_k, protocol.wasserstein, &report.local.modes));
    if (samples) {
      samples->local_generated.push_back(generated);
      samples->local_true.push_back(truth);
    }
  }
  report.local.values = mean_of(report.local.per_anchor);
  if (samples) {
    samples->global_generated = global_generated;
    samples->global_true = global_true;
  }
  return report;
}

}  // namespace

MetricReport evaluate(const ConditionalSampler& sampler, datasets::DatasetId id, const Protocol& protocol,
                      EvaluationSamples* samples) {
  if (protocol.global_points <= protocol.knn_k || protocol.local_points <= protocol.knn_k) {
    throw std::invalid_argument("evaluate: sample counts must exceed the KL neighbor count");
  }
  if (protocol.local_anchors == 0) throw std::invalid_argument("evaluate: need at least one local anchor");
  MetricReport report;
  report.dataset = id;
  report.protocol = protocol;
  report.inference_k = sampler.inference_k;
  report.forward = evaluate_direction(sampler.forward, id, protocol, true, samples ? &samples->forward : nullptr);
  report.reverse = evaluate_direction(sampler.reverse, id, protocol, false, samples ? &samples->reverse : nullptr);
  return report;
}

}  // namespace bmnet::metrics
