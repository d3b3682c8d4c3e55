#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bmnet/datasets.hpp"
#include "bmnet/flow.hpp"
#include "bmnet/metrics.hpp"
#include "bmnet/training.hpp"

namespace bmnet::io {

using Json = nlohmann::json;

// Input that cannot be parsed or does not match its schema.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// printf("%.17g"): enough digits to round-trip any double.
std::string format_double(double value);

// Pretty-printed JSON with every floating-point number written by format_double.
std::string dump_json(const Json& value);
Json parse_json(std::string_view text, const std::string& what);

// Writes through a temporary sibling file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

// FNV-1a 64-bit, rendered as 16 lowercase hex digits.
std::string content_hash(std::string_view bytes);

// Dataset CSV: header x0,x1,x2,y0,y1, one pair per row.
std::string dataset_to_csv(const datasets::Dataset& data);
datasets::Dataset dataset_from_csv(std::string_view text);

// Point CSV with the given column names (one per column of `points`).
std::string points_to_csv(const Matrix& points, const std::vector<std::string>& header);

// Everything a run needs besides data and per-command seeds.
struct RunConfig {
  flow::FlowConfig flow;
  training::ClusterConfig clustering;
  training::TrainConfig train;
  std::size_t inference_k = 50;
  metrics::Protocol protocol;
};

Json to_json(const RunConfig& config);
// Missing keys keep their defaults; unknown keys and wrong types are rejected.
RunConfig run_config_from_json(const Json& json);

inline constexpr int kCheckpointVersion = 1;

struct TrainingDataRef {
  std::string path;
  std::string hash;
  std::size_t rows = 0;
};

Json checkpoint_to_json(const training::TrainedModel& model, const RunConfig& config,
                        const TrainingDataRef& data);

struct Checkpoint {
  RunConfig config;
  training::TrainedModel model;  // model.data is left empty
  TrainingDataRef data;
};

Checkpoint checkpoint_from_json(const Json& json);

Json report_to_json(const metrics::MetricReport& report);

}  // namespace bmnet::io
