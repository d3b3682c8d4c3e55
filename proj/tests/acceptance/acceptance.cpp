// Acceptance checks. Each criterion prints one PASS/FAIL line; the exit code
// is nonzero when any selected criterion fails.
//
//   acceptance [--work DIR] [N ...]     (no N runs all criteria)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "bmnet/cli.hpp"
#include "bmnet/clustering.hpp"
#include "bmnet/datasets.hpp"
#include "bmnet/flow.hpp"
#include "bmnet/inference.hpp"
#include "bmnet/metrics.hpp"
#include "bmnet/serialization.hpp"
#include "bmnet/tape.hpp"
#include "bmnet/training.hpp"

using namespace bmnet;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string bound(const std::string& name, double value, const std::string& op, double limit) {
  bool holds = op == "<=" ? value <= limit : op == "<" ? value < limit : op == ">=" ? value >= limit : value > limit;
  std::string shown = op;
  if (!holds) shown = op == "<=" ? ">" : op == "<" ? ">=" : op == ">=" ? "<" : "<=";
  return name + " " + fmt(value) + " " + shown + " " + fmt(limit);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

fs::path g_work = "acceptance_work";

Matrix normal_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double shift = 0.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() + shift;
  return m;
}

void perturb(flow::FlowNetwork& net, double scale, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = 0; i < net.params.size(); ++i) {
    Matrix& m = net.params.value(i);
    m += normal_matrix(m.rows(), m.cols(), rng) * scale;
  }
}

// Trains with progress on stderr every `every` epochs.
training::TrainedModel train_logged(const datasets::Dataset& data, const io::RunConfig& config, const char* tag,
                                    std::size_t every) {
  training::Trainer trainer(data, config.flow, config.clustering, config.train);
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t e = 0; e < config.train.epochs; ++e) {
    trainer.run_epoch(e);
    if ((e + 1) % every == 0) {
      std::cerr << "  [" << tag << "] epoch " << e + 1 << "/" << config.train.epochs << ", "
                << fmt(seconds_since(start)) << " s\n";
    }
  }
  return trainer.release();
}

// ---------------------------------------------------------------------------

Outcome invertibility() {
  io::RunConfig config;
  config.train.epochs = 20;
  const auto data = datasets::generate_dataset(datasets::DatasetId::Torus1, 1000, 101);
  const auto trained = train_logged(data, config, "1", 10);
  flow::FlowNetwork untrained = flow::init_network(config.flow);
  flow::FlowNetwork perturbed = untrained;
  perturb(perturbed, 0.2, 5);

  double worst = 0.0;
  Rng rng(102);
  auto run = [&](const flow::FlowNetwork& net) {
    for (int trial = 0; trial < 1000; ++trial) {
      const Matrix x = normal_matrix(1, 3, rng), z1 = normal_matrix(1, 2, rng);
      const RowVector rx = normal_matrix(1, 3, rng), ry = normal_matrix(1, 2, rng);
      const auto [y, z2] = flow::forward(net, x, z1, rx, ry);
      const auto [xb, z1b] = flow::inverse(net, y, z2, rx, ry);
      worst = std::max({worst, (xb - x).cwiseAbs().maxCoeff(), (z1b - z1).cwiseAbs().maxCoeff()});
    }
  };
  run(trained.network);
  run(untrained);
  run(perturbed);
  return {worst <= 1e-6, bound("max |inverse(forward(v)) - v|", worst, "<=", 1e-6) +
                             " over 3000 round-trips (trained, initial, perturbed networks)"};
}

// Smallest gap between the nearest and second-nearest squared distance over
// both directions of a chamfer term; a tiny gap means a near-tie in the argmin.
double chamfer_tie_gap(const Matrix& a, const Matrix& b) {
  double gap = std::numeric_limits<double>::infinity();
  auto scan = [&](const Matrix& p, const Matrix& q) {
    if (q.rows() < 2) return;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      std::vector<double> d;
      for (Eigen::Index j = 0; j < q.rows(); ++j) d.push_back((p.row(i) - q.row(j)).squaredNorm());
      std::partial_sort(d.begin(), d.begin() + 2, d.end());
      gap = std::min(gap, d[1] - d[0]);
    }
  };
  scan(a, b);
  scan(b, a);
  return gap;
}

Outcome gradients() {
  const auto start = std::chrono::steady_clock::now();
  flow::FlowConfig fc;
  double worst = 0.0;
  int accepted = 0, excluded = 0;
  std::size_t coords = 0;
  for (std::uint64_t seed = 0; accepted < 20; ++seed) {
    flow::FlowNetwork net = flow::init_network([&] {
      auto c = fc;
      c.seed = seed;
      return c;
    }());
    perturb(net, 0.1, derive_seed(seed, 1));
    Rng rng(derive_seed(seed, 2));
    const auto data = datasets::generate_dataset(datasets::DatasetId::Torus1, 4, derive_seed(seed, 3));
    training::CellBatch batch;
    batch.x = data.xs();
    batch.y = data.ys();
    batch.prior_z1 = {Eigen::Vector2d(rng.normal() * 0.2, rng.normal() * 0.2), rng.uniform(0.5, 1.5)};
    batch.prior_z2 = {Eigen::Vector2d(rng.normal() * 0.2, rng.normal() * 0.2), rng.uniform(0.5, 1.5)};
    flow::FiberPrior prior = flow::make_prior(1, 1);
    prior.z1[0] = batch.prior_z1;
    prior.z2[0] = batch.prior_z2;
    batch.z1 = flow::sample_prior(prior, flow::PriorSide::Z1, 0, 4, rng);
    batch.z2 = flow::sample_prior(prior, flow::PriorSide::Z2, 0, 4, rng);
    batch.rx = normal_matrix(1, 3, rng);
    batch.ry = normal_matrix(1, 2, rng);

    const auto [y_hat, z2_hat] = flow::forward(net, batch.x, batch.z1, batch.rx, batch.ry);
    const auto [x_hat, z1_hat] = flow::inverse(net, batch.y, batch.z2, batch.rx, batch.ry);
    if (std::min(chamfer_tie_gap(y_hat, batch.y), chamfer_tie_gap(x_hat, batch.x)) < 1e-3) {
      ++excluded;
      continue;
    }
    const numerics::Computation loss = [&](numerics::Tape& tape, const std::vector<numerics::Var>& leaves) {
      return training::batch_loss(net, tape, leaves, batch, 0.05).total;
    };
    numerics::FiniteDiffOptions options;
    options.h = 1e-5;
    options.max_per_param = 12;
    options.seed = derive_seed(seed, 4);
    const double err = numerics::finite_diff_check(net.params, loss, options);
    for (std::size_t p = 0; p < net.params.size(); ++p) {
      coords += std::min<std::size_t>(options.max_per_param, static_cast<std::size_t>(net.params.value(p).size()));
    }
    worst = std::max(worst, err);
    ++accepted;
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-4 && elapsed < 60.0,
          bound("max relative error", worst, "<=", 1e-4) + " over " + std::to_string(accepted) + " seeds, " +
              std::to_string(coords) + " coordinates (" + std::to_string(excluded) + " near-tie seeds excluded), " +
              bound("runtime s", elapsed, "<", 60)};
}

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

Outcome metric_oracles() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(301);
  double w_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng.index(6));
    const Matrix a = normal_matrix(n, 2, rng), b = normal_matrix(n, 2, rng, 0.3);
    for (int p : {1, 2}) w_err = std::max(w_err, std::abs(metrics::wasserstein(a, b, p) - enumerate_wasserstein(a, b, p)));
  }
  Matrix s_hat(1, 2), s(2, 2);
  s_hat << 0, 0;
  s << 1, 0, 0, 2;
  const double msmd = metrics::msmd(s_hat, s);
  const Matrix p = normal_matrix(5000, 1, rng), q = normal_matrix(5000, 1, rng, 1.0);
  const double kl = metrics::knn_kl(p, q, 5);
  const double mmd = metrics::mmd(normal_matrix(2000, 1, rng), normal_matrix(2000, 1, rng));
  const double elapsed = seconds_since(start);
  const bool pass = w_err <= 1e-9 && std::abs(msmd - 3.5) <= 1e-12 && std::abs(kl - 0.5) <= 0.15 && mmd <= 0.01 &&
                    elapsed < 120.0;
  return {pass, bound("exact W vs enumeration", w_err, "<=", 1e-9) + "; msmd " + fmt(msmd) + " (3.5); " +
                    bound("|knn_kl - 0.5|", std::abs(kl - 0.5), "<=", 0.15) + "; " + bound("mmd null", mmd, "<=", 0.01) +
                    "; " + bound("runtime s", elapsed, "<", 120)};
}

Outcome dataset_fidelity() {
  double worst = 0.0;
  double branch_fraction = 0.0;
  for (auto id : {datasets::DatasetId::Torus1, datasets::DatasetId::Torus2, datasets::DatasetId::Mobius}) {
    const auto data = datasets::generate_dataset(id, 100000, 401);
    std::size_t upper = 0;
    for (const auto& pair : data.pairs) {
      worst = std::max({worst, datasets::manifold_residual(id, pair.x, datasets::Side::X),
                        datasets::manifold_residual(id, pair.y, datasets::Side::Y)});
      if (id == datasets::DatasetId::Torus2) {
        double phi = std::atan2(pair.x.y(), pair.x.x());
        if (phi < 0) phi += 2 * kPi;
        upper += (pair.y - datasets::circle_point(phi / 2 + kPi)).norm() < 1e-9;
      }
    }
    if (id == datasets::DatasetId::Torus2) branch_fraction = static_cast<double>(upper) / 100000.0;
  }
  return {worst <= 1e-12 && std::abs(branch_fraction - 0.5) <= 0.01,
          bound("max residual over 3 x 1e5 pairs", worst, "<=", 1e-12) + "; Torus2 second-branch frequency " +
              fmt(branch_fraction) + " (0.5 +/- 0.01)"};
}

struct FullRun {
  training::TrainedModel model;
  metrics::MetricReport report;
};

FullRun full_schedule_run(datasets::DatasetId id, const char* tag) {
  io::RunConfig config;
  const auto data = datasets::generate_dataset(id, 5000, 501);
  auto model = train_logged(data, config, tag, 100);
  config.protocol.seed = 502;
  const auto report = metrics::evaluate(metrics::model_sampler(model, config.inference_k), id, config.protocol);
  // Artifacts are loadable by the command-line tool (sample, eval).
  fs::create_directories(g_work);
  const std::string stem = std::string("full_") + datasets::to_string(id);
  const std::string csv = io::dataset_to_csv(data);
  const fs::path data_path = fs::absolute(g_work / (stem + ".csv")).lexically_normal();
  io::write_file_atomic(data_path, csv);
  const io::TrainingDataRef ref{data_path.string(), io::content_hash(csv), data.size()};
  io::write_file_atomic(g_work / (stem + "_model.json"), io::dump_json(io::checkpoint_to_json(model, config, ref)));
  io::write_file_atomic(g_work / (stem + "_report.json"), io::dump_json(io::report_to_json(report)));
  return {std::move(model), report};
}

Outcome full_schedule_torus1() {
  const auto start = std::chrono::steady_clock::now();
  const auto run = full_schedule_run(datasets::DatasetId::Torus1, "5");
  const double gf = run.report.forward.global.values.w1;
  const double gr = run.report.reverse.global.values.w1;
  const double lf = run.report.forward.local.values.w1;
  return {gf <= 0.06 && gr <= 0.14 && lf <= 0.28,
          bound("global forward W1", gf, "<=", 0.06) + "; " + bound("global reverse W1", gr, "<=", 0.14) + "; " +
              bound("local forward W1", lf, "<=", 0.28) + "; runtime " + fmt(seconds_since(start)) + " s"};
}

Outcome torus2_bimodality() {
  const auto run = full_schedule_run(datasets::DatasetId::Torus2, "6");
  const auto anchors = datasets::generate_dataset(datasets::DatasetId::Torus2, 10, 601).xs();
  double worst_sep = 0.0, worst_mass = 0.0;
  bool modes_ok = true;
  for (Eigen::Index a = 0; a < anchors.rows(); ++a) {
    const Matrix y = inference::sample_forward(run.model, Eigen::Vector3d(anchors.row(a).transpose()),
                                               {50, 400, derive_seed(602, static_cast<std::uint64_t>(a))});
    const auto km = clustering::kmeans(y, 2, 603);
    const double a0 = std::atan2(km.centroids(0, 1), km.centroids(0, 0));
    const double a1 = std::atan2(km.centroids(1, 1), km.centroids(1, 0));
    const double sep = std::abs(std::remainder(a0 - a1, 2 * kPi));
    const double mass =
        static_cast<double>(std::count(km.assignments.begin(), km.assignments.end(), 0u)) / static_cast<double>(y.rows());
    worst_sep = std::max(worst_sep, std::abs(sep - kPi));
    worst_mass = std::max(worst_mass, std::abs(mass - 0.5));
    modes_ok = modes_ok && std::abs(sep - kPi) <= 0.3 && std::abs(mass - 0.5) <= 0.15;
  }
  const double gf = run.report.forward.global.values.w1;
  return {modes_ok && gf <= 0.03, bound("max |separation - pi|", worst_sep, "<=", 0.3) + "; " +
                                      bound("max |mode mass - 0.5|", worst_mass, "<=", 0.15) + "; " +
                                      bound("global forward W1", gf, "<=", 0.03)};
}

struct SmokeResult {
  bool ok = false;
  std::string error;
  std::string checkpoint, report;
  double w1_forward = 0.0;
  double seconds = 0.0;
};

// gen-data, train, sample and eval through the command-line entry point.
SmokeResult smoke_pipeline(const fs::path& dir, const fs::path& data) {
  const auto start = std::chrono::steady_clock::now();
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto p = [&](const char* name) { return (dir / name).string(); };
  io::write_file_atomic(p("config.json"), R"({"train": {"epochs": 500, "milestones": [250, 375]}})");
  std::ostringstream out, err;
  const std::vector<std::vector<std::string>> steps{
      {"gen-data", "--dataset", "torus1", "--n", "2000", "--seed", "701", "--out", data.string()},
      {"train", "--data", data.string(), "--config", p("config.json"), "--out", p("model.json")},
      {"sample", "--model", p("model.json"), "--direction", "fwd", "--anchor", "1.25,0,0", "--n", "200", "--seed",
       "702", "--out", p("fwd.csv")},
      {"sample", "--model", p("model.json"), "--direction", "rev", "--anchor", "1,0", "--n", "200", "--seed", "703",
       "--out", p("rev.csv")},
      {"eval", "--model", p("model.json"), "--dataset", "torus1", "--seed", "704", "--report", p("report.json")},
  };
  SmokeResult result;
  for (const auto& step : steps) {
    if (cli::run_cli(step, out, err) != 0) {
      result.error = step.front() + " failed: " + err.str();
      return result;
    }
  }
  result.seconds = seconds_since(start);
  result.checkpoint = io::read_file(p("model.json"));
  result.report = io::read_file(p("report.json"));
  result.w1_forward = io::parse_json(result.report, "report")["metrics"]["forward.global.w1"].get<double>();
  result.ok = true;
  return result;
}

Outcome smoke() {
  const auto r = smoke_pipeline(g_work / "smoke", g_work / "smoke" / "data.csv");
  if (!r.ok) return {false, r.error};
  return {r.w1_forward <= 0.15 && r.seconds <= 600.0,
          bound("global forward W1", r.w1_forward, "<=", 0.15) + "; " + bound("runtime s", r.seconds, "<=", 600)};
}

Outcome determinism() {
  const fs::path data = g_work / "determinism_data.csv";
  const auto a = smoke_pipeline(g_work / "determinism_a", data);
  const auto b = smoke_pipeline(g_work / "determinism_b", data);
  if (!a.ok || !b.ok) return {false, a.ok ? b.error : a.error};
  const bool reports = a.report == b.report;
  const bool checkpoints = a.checkpoint == b.checkpoint;
  return {reports && checkpoints, std::string("checkpoints ") + (checkpoints ? "identical" : "differ") + " (" +
                                      std::to_string(a.checkpoint.size()) + " bytes); reports " +
                                      (reports ? "identical" : "differ") + " (" + std::to_string(a.report.size()) +
                                      " bytes)"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "invertibility", invertibility},
      {2, "gradient correctness", gradients},
      {3, "metric oracles", metric_oracles},
      {4, "dataset fidelity", dataset_fidelity},
      {5, "full-schedule Torus1", full_schedule_torus1},
      {6, "Torus2 bimodality", torus2_bimodality},
      {7, "smoke pipeline", smoke},
      {8, "determinism", determinism},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--work" && i + 1 < argc) {
      g_work = argv[++i];
    } else {
      selected.push_back(std::stoi(arg));
    }
  }
  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (outcome.pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name << "): " << outcome.detail
              << std::endl;
    failures += !outcome.pass;
  }
  return failures == 0 ? 0 : 1;
}
