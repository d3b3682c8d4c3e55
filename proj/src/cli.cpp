#include "bmnet/cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <stdexcept>

#include <CLI11.hpp>

#include "bmnet/datasets.hpp"
#include "bmnet/inference.hpp"
#include "bmnet/metrics.hpp"
#include "bmnet/serialization.hpp"
#include "bmnet/training.hpp"

namespace bmnet::cli {
namespace {

namespace fs = std::filesystem;

// Raised after parsing when arguments are well-formed but unusable.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Largest residual tolerated when checking that training data belongs to a dataset family.
constexpr double kFamilyTolerance = 1e-9;

Eigen::VectorXd parse_anchor(const std::string& text, datasets::Direction direction) {
  std::vector<double> values;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  while (true) {
    while (p < end && *p == ' ') ++p;
    double v = 0.0;
    const auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc{} || !std::isfinite(v)) throw UsageError("--anchor: expected comma-separated numbers, got '" + text + "'");
    values.push_back(v);
    p = next;
    while (p < end && *p == ' ') ++p;
    if (p == end) break;
    if (*p != ',') throw UsageError("--anchor: expected comma-separated numbers, got '" + text + "'");
    ++p;
  }
  const std::size_t want = direction == datasets::Direction::Forward ? 3 : 2;
  if (values.size() != want) {
    throw UsageError("--anchor: direction " + std::string(direction == datasets::Direction::Forward ? "fwd" : "rev") +
                     " takes " + std::to_string(want) + " coordinates, got " + std::to_string(values.size()));
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

datasets::DatasetId parse_dataset(const std::string& name) {
  try {
    return datasets::parse_dataset_id(name);
  } catch (const std::invalid_argument&) {
    throw UsageError("--dataset: expected torus1, torus2 or mobius, got '" + name + "'");
  }
}

std::vector<std::string> header_for(std::size_t cols, char prefix) {
  std::vector<std::string> header;
  for (std::size_t c = 0; c < cols; ++c) header.push_back(std::string(1, prefix) + std::to_string(c));
  return header;
}

// Output of a conditional draw: forward samples live in Y, reverse samples in X.
std::string samples_csv(const Matrix& points, datasets::Direction direction) {
  return io::points_to_csv(points, header_for(static_cast<std::size_t>(points.cols()),
                                              direction == datasets::Direction::Forward ? 'y' : 'x'));
}

datasets::Dataset load_dataset(const fs::path& path, const std::string& text) {
  try {
    return io::dataset_from_csv(text);
  } catch (const io::FormatError& e) {
    throw io::FormatError(path.string() + ": " + e.what());
  }
}

// Loads a checkpoint and re-attaches its training data after checking the stored hash.
io::Checkpoint load_model(const fs::path& path) {
  io::Checkpoint cp;
  try {
    cp = io::checkpoint_from_json(io::parse_json(io::read_file(path), path.string()));
  } catch (const io::FormatError& e) {
    throw io::FormatError(path.string() + ": " + e.what());
  }
  const std::string text = io::read_file(cp.data.path);
  const std::string hash = io::content_hash(text);
  if (hash != cp.data.hash) {
    throw std::runtime_error("training_data.hash: " + cp.data.path + " has hash " + hash + ", checkpoint expects " +
                             cp.data.hash);
  }
  cp.model.data = io::dataset_from_csv(text);
  if (cp.model.data.size() != cp.data.rows) {
    throw std::runtime_error("training_data.rows: " + cp.data.path + " has " + std::to_string(cp.model.data.size()) +
                             " rows, checkpoint expects " + std::to_string(cp.data.rows));
  }
  return cp;
}

void check_family(const datasets::Dataset& data, datasets::DatasetId id) {
  for (std::size_t r = 0; r < data.size(); ++r) {
    const double rx = datasets::manifold_residual(id, data.pairs[r].x, datasets::Side::X);
    const double ry = datasets::manifold_residual(id, data.pairs[r].y, datasets::Side::Y);
    if (!(rx <= kFamilyTolerance && ry <= kFamilyTolerance)) {
      throw std::runtime_error("--dataset: training row " + std::to_string(r + 1) + " does not lie on " +
                               datasets::to_string(id));
    }
  }
}

void write_samples(const fs::path& dir, const std::string& name, const metrics::DirectionSamples& s,
                   datasets::Direction direction) {
  io::write_file_atomic(dir / (name + "_global_generated.csv"), samples_csv(s.global_generated, direction));
  io::write_file_atomic(dir / (name + "_global_true.csv"), samples_csv(s.global_true, direction));
  for (std::size_t a = 0; a < s.local_generated.size(); ++a) {
    const std::string stem = name + "_local_" + std::to_string(a);
    io::write_file_atomic(dir / (stem + "_generated.csv"), samples_csv(s.local_generated[a], direction));
    io::write_file_atomic(dir / (stem + "_true.csv"), samples_csv(s.local_true[a], direction));
  }
}

struct Options {
  std::string dataset, data, config, out, model, direction, anchor, report, log;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

int cmd_gen_data(const Options& o, std::ostream& out) {
  const auto id = parse_dataset(o.dataset);
  if (o.n == 0) throw UsageError("--n: must be positive");
  const auto data = datasets::generate_dataset(id, o.n, o.seed);
  io::write_file_atomic(o.out, io::dataset_to_csv(data));
  out << "wrote " << data.size() << " pairs to " << o.out << "\n";
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const io::RunConfig config = [&] {
    try {
      return io::run_config_from_json(io::parse_json(io::read_file(o.config), o.config));
    } catch (const io::FormatError& e) {
      throw io::FormatError(o.config + ": " + e.what());
    }
  }();
  const std::string text = io::read_file(o.data);
  datasets::Dataset data = load_dataset(o.data, text);

  std::string log_text = "epoch,cell_i,cell_j,loss_forward,loss_reverse,reg\n";
  const training::StepLogger logger = [&](const training::StepRecord& r) {
    log_text += std::to_string(r.epoch) + ',' + std::to_string(r.cell_i) + ',' + std::to_string(r.cell_j) + ',' +
                io::format_double(r.loss_forward) + ',' + io::format_double(r.loss_reverse) + ',' +
                io::format_double(r.reg) + '\n';
  };
  const std::size_t rows = data.size();
  const auto model = training::train(std::move(data), config.flow, config.clustering, config.train, logger);

  const io::TrainingDataRef ref{fs::absolute(o.data).lexically_normal().string(), io::content_hash(text), rows};
  io::write_file_atomic(o.out, io::dump_json(io::checkpoint_to_json(model, config, ref)));
  const std::string log_path = o.log.empty() ? o.out + ".loss.csv" : o.log;
  io::write_file_atomic(log_path, log_text);
  out << "trained " << config.train.epochs << " epochs on " << rows << " pairs; wrote " << o.out << "\n";
  return kExitOk;
}

datasets::Direction parse_direction(const std::string& text) {
  if (text == "fwd") return datasets::Direction::Forward;
  if (text == "rev") return datasets::Direction::Reverse;
  throw UsageError("--direction: expected fwd or rev, got '" + text + "'");
}

int cmd_sample(const Options& o, std::ostream& out) {
  const auto direction = parse_direction(o.direction);
  const auto anchor = parse_anchor(o.anchor, direction);
  if (o.n == 0) throw UsageError("--n: must be positive");
  const io::Checkpoint cp = load_model(o.model);
  const inference::InferenceConfig cfg{cp.config.inference_k, o.n, o.seed};
  const Matrix points = direction == datasets::Direction::Forward
                            ? inference::sample_forward(cp.model, Eigen::Vector3d(anchor), cfg)
                            : inference::sample_reverse(cp.model, Eigen::Vector2d(anchor), cfg);
  io::write_file_atomic(o.out, samples_csv(points, direction));
  out << "wrote " << points.rows() << " samples to " << o.out << "\n";
  return kExitOk;
}

int cmd_oracle(const Options& o, std::ostream& out) {
  const auto id = parse_dataset(o.dataset);
  const auto direction = parse_direction(o.direction);
  const auto anchor = parse_anchor(o.anchor, direction);
  if (o.n == 0) throw UsageError("--n: must be positive");
  Rng rng(o.seed);
  const Matrix points = datasets::conditional_oracle(id, direction, anchor, o.n, rng);
  io::write_file_atomic(o.out, samples_csv(points, direction));
  out << "wrote " << points.rows() << " samples to " << o.out << "\n";
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const auto id = parse_dataset(o.dataset);
  const io::Checkpoint cp = load_model(o.model);
  check_family(cp.model.data, id);
  metrics::Protocol protocol = cp.config.protocol;
  protocol.seed = o.seed;
  metrics::EvaluationSamples samples;
  const auto report =
      metrics::evaluate(metrics::model_sampler(cp.model, cp.config.inference_k), id, protocol, &samples);
  const fs::path report_path(o.report);
  const fs::path dir = report_path.parent_path() / (report_path.stem().string() + "_samples");
  fs::create_directories(dir);
  write_samples(dir, "forward", samples.forward, datasets::Direction::Forward);
  write_samples(dir, "reverse", samples.reverse, datasets::Direction::Reverse);
  io::write_file_atomic(report_path, io::dump_json(io::report_to_json(report)));
  out << "forward global W1 " << io::format_double(report.forward.global.values.w1) << ", reverse global W1 "
      << io::format_double(report.reverse.global.values.w1) << "; wrote " << o.report << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bundle morphism network: many-to-many maps between manifolds", "bmnet"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen-data", "Generate a paired dataset as CSV");
  gen->add_option("--dataset", o.dataset, "torus1 | torus2 | mobius")->required();
  gen->add_option("--n", o.n, "Number of pairs")->required();
  gen->add_option("--seed", o.seed, "Random seed")->required();
  gen->add_option("--out", o.out, "Output CSV")->required();

  auto* train = app.add_subcommand("train", "Train a model from a dataset CSV and a JSON config");
  train->add_option("--data", o.data, "Dataset CSV")->required();
  train->add_option("--config", o.config, "Run config JSON")->required();
  train->add_option("--out", o.out, "Checkpoint JSON")->required();
  train->add_option("--log", o.log, "Loss log CSV (default: <out>.loss.csv)");

  auto* sample = app.add_subcommand("sample", "Draw conditional samples from a trained model");
  sample->add_option("--model", o.model, "Checkpoint JSON")->required();
  sample->add_option("--direction", o.direction, "fwd | rev")->required();
  sample->add_option("--anchor", o.anchor, "\"x0,x1,x2\" (fwd) or \"y0,y1\" (rev)")->required();
  sample->add_option("--n", o.n, "Number of samples")->required();
  sample->add_option("--seed", o.seed, "Random seed")->required();
  sample->add_option("--out", o.out, "Output CSV")->required();

  auto* oracle = app.add_subcommand("oracle", "Draw exact conditional samples from a dataset");
  oracle->add_option("--dataset", o.dataset, "torus1 | torus2 | mobius")->required();
  oracle->add_option("--direction", o.direction, "fwd | rev")->required();
  oracle->add_option("--anchor", o.anchor, "\"x0,x1,x2\" (fwd) or \"y0,y1\" (rev)")->required();
  oracle->add_option("--n", o.n, "Number of samples")->required();
  oracle->add_option("--seed", o.seed, "Random seed")->required();
  oracle->add_option("--out", o.out, "Output CSV")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a model against the dataset's exact conditionals");
  eval->add_option("--model", o.model, "Checkpoint JSON")->required();
  eval->add_option("--dataset", o.dataset, "torus1 | torus2 | mobius")->required();
  eval->add_option("--seed", o.seed, "Protocol seed")->required();
  eval->add_option("--report", o.report, "Report JSON; samples go to <stem>_samples/")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(o, out);
    if (train->parsed()) return cmd_train(o, out);
    if (sample->parsed()) return cmd_sample(o, out);
    if (oracle->parsed()) return cmd_oracle(o, out);
    return cmd_eval(o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace bmnet::cli
