#include <gtest/gtest.h>

#include <cstdlib>

#include "bmnet/serialization.hpp"

using namespace bmnet;
using namespace bmnet::io;

namespace {

training::TrainedModel small_model(std::size_t epochs) {
  flow::FlowConfig fc;
  fc.hidden = 8;
  fc.blocks = 2;
  training::TrainConfig tc;
  tc.epochs = epochs;
  training::Trainer trainer(datasets::generate_dataset(datasets::DatasetId::Torus1, 300, 1), fc, {}, tc);
  for (std::size_t e = 0; e < epochs; ++e) trainer.run_epoch(e);
  return trainer.release();
}

RunConfig small_config() {
  RunConfig config;
  config.flow.hidden = 8;
  config.flow.blocks = 2;
  return config;
}

}  // namespace

TEST(Format, DoublesRoundTrip) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-30, 30));
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(dump_json(Json{{"a", 0.5}, {"b", {1, 2}}}), "{\n  \"a\": 0.5,\n  \"b\": [1, 2]\n}\n");
}

TEST(Hash, Fnv1aVectors) {
  EXPECT_EQ(content_hash(""), "cbf29ce484222325");
  EXPECT_EQ(content_hash("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(content_hash("foobar"), "85944171f73967e8");
}

TEST(DatasetCsv, RoundTripIsExact) {
  const auto data = datasets::generate_dataset(datasets::DatasetId::Mobius, 50, 3);
  const auto back = dataset_from_csv(dataset_to_csv(data));
  ASSERT_EQ(back.size(), data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(back.pairs[i].x, data.pairs[i].x);
    EXPECT_EQ(back.pairs[i].y, data.pairs[i].y);
  }
}

TEST(DatasetCsv, RejectsMalformedInput) {
  EXPECT_THROW(dataset_from_csv(""), FormatError);
  EXPECT_THROW(dataset_from_csv("a,b\n1,2\n"), FormatError);
  EXPECT_THROW(dataset_from_csv("x0,x1,x2,y0,y1\n"), FormatError);
  try {
    dataset_from_csv("x0,x1,x2,y0,y1\n1,2,3,4,5\n1,2,x,4,5\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(dataset_from_csv("x0,x1,x2,y0,y1\n1,2,3,4\n"), FormatError);
  EXPECT_THROW(dataset_from_csv("x0,x1,x2,y0,y1\n1,2,3,4,nan\n"), FormatError);
}

TEST(RunConfigJson, RoundTripAndDefaults) {
  RunConfig config;
  config.train.epochs = 17;
  config.train.milestones = {5, 9};
  config.flow.seed = 123456789012345ULL;
  config.protocol.local_points = 77;
  const RunConfig back = run_config_from_json(parse_json(dump_json(to_json(config)), "test"));
  EXPECT_EQ(dump_json(to_json(back)), dump_json(to_json(config)));
  EXPECT_EQ(back.train.milestones, config.train.milestones);

  const RunConfig defaults = run_config_from_json(Json::object());
  EXPECT_EQ(dump_json(to_json(defaults)), dump_json(to_json(RunConfig{})));
}

TEST(RunConfigJson, RejectsUnknownAndMistyped) {
  try {
    run_config_from_json(parse_json(R"({"train": {"epoch": 3}})", "test"));
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("train.epoch"), std::string::npos) << e.what();
  }
  try {
    run_config_from_json(parse_json(R"({"flow": {"hidden": "wide"}})", "test"));
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("flow.hidden"), std::string::npos) << e.what();
  }
  EXPECT_THROW(run_config_from_json(parse_json(R"({"extra": 1})", "test")), FormatError);
  EXPECT_THROW(run_config_from_json(parse_json(R"({"train": {"epochs": -1}})", "test")), FormatError);
  EXPECT_THROW(parse_json("{", "test"), FormatError);
}

TEST(CheckpointJson, LoadReproducesParameters) {
  const auto model = small_model(2);
  const RunConfig config = small_config();
  const TrainingDataRef ref{"/data/train.csv", "0123456789abcdef", 300};
  const std::string first = dump_json(checkpoint_to_json(model, config, ref));
  const Checkpoint cp = checkpoint_from_json(parse_json(first, "test"));
  ASSERT_EQ(cp.model.network.params.size(), model.network.params.size());
  for (std::size_t i = 0; i < model.network.params.size(); ++i) {
    EXPECT_EQ(cp.model.network.params.value(i), model.network.params.value(i)) << model.network.params.name(i);
  }
  EXPECT_EQ(flow::composed_permutation(cp.model.network), flow::composed_permutation(model.network));
  EXPECT_EQ(cp.model.clusters.centroids_y, model.clusters.centroids_y);
  EXPECT_EQ(cp.model.prior.z2[3].radius, model.prior.z2[3].radius);
  EXPECT_EQ(cp.data.hash, ref.hash);

  const std::string second = dump_json(checkpoint_to_json(cp.model, cp.config, cp.data));
  const Checkpoint cp2 = checkpoint_from_json(parse_json(second, "test"));
  EXPECT_EQ(second, first);
  EXPECT_EQ(dump_json(checkpoint_to_json(cp2.model, cp2.config, cp2.data)), second);
}

TEST(CheckpointJson, RejectsMismatchAndVersion) {
  const auto model = small_model(1);
  Json json = checkpoint_to_json(model, small_config(), {"p", "h", 300});
  Json wrong_version = json;
  wrong_version["format_version"] = 2;
  EXPECT_THROW(checkpoint_from_json(wrong_version), FormatError);

  Json wrong_width = json;
  wrong_width["config"]["flow"]["hidden"] = 9;
  EXPECT_THROW(checkpoint_from_json(wrong_width), FormatError);

  Json wrong_clusters = json;
  wrong_clusters["config"]["clustering"]["n_x"] = 7;
  try {
    checkpoint_from_json(wrong_clusters);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("clusters"), std::string::npos) << e.what();
  }
}

TEST(WriteFile, AtomicReplace) {
  const auto path = std::filesystem::temp_directory_path() / "bmnet_atomic_test.txt";
  write_file_atomic(path, "first");
  write_file_atomic(path, "second");
  EXPECT_EQ(read_file(path), "second");
  std::filesystem::remove(path);
  EXPECT_THROW(read_file(path), std::runtime_error);
}
