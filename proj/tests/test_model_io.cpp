#include <fstream>

#include <gtest/gtest.h>

#include "fiberforge/model_io.hpp"
#include "test_support.hpp"

namespace fiberforge {
namespace {

TaskModel small_trained_model(Direction d) {
  NetworkConfig cfg;
  cfg.seed = 17;
  cfg.epochs = 3;
  const Dataset ds = generate_dataset(10, 17);
  return train_task(ds.records, cfg, d).model;
}

TEST(ModelIo, SaveLoadSaveIsByteIdentical) {
  test::TempDir dir;
  for (Direction d : {Direction::kPredictive, Direction::kDesign}) {
    const TaskModel m = small_trained_model(d);
    save_model(m, dir / "a.json");
    const TaskModel loaded = load_model(dir / "a.json");
    EXPECT_EQ(loaded, m);
    save_model(loaded, dir / "b.json");
    EXPECT_EQ(test::read_file(dir / "a.json"), test::read_file(dir / "b.json"));
  }
}

TEST(ModelIo, DocumentFields) {
  const auto j = model_to_json(small_trained_model(Direction::kDesign));
  EXPECT_EQ(j["format_version"], 1);
  EXPECT_EQ(j["task"], "design");
  EXPECT_EQ(j["config"]["batch_size"], 20);
  EXPECT_EQ(j["config"]["learning_rate"], 0.001);
  EXPECT_EQ(j["config"]["hidden_neurons"], 14);
  EXPECT_EQ(j["layers"].size(), 5u);
  EXPECT_EQ(j["layers"][0]["cols"], 4);
  EXPECT_EQ(j["layers"][4]["rows"], 3);
  EXPECT_EQ(j["layers"][4]["activation"], "linear");
  EXPECT_EQ(j["scalers"]["input"]["mean"].size(), 4u);
}

TEST(ModelIo, LoadedForwardIsBitExact) {
  const TaskModel m = small_trained_model(Direction::kPredictive);
  const TaskModel loaded = model_from_string(model_to_string(m));
  Rng rng(1, Stream::kTest);
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> x{rng.standard_normal(), rng.standard_normal(), rng.standard_normal()};
    EXPECT_EQ(predict(loaded.net, x), predict(m.net, x));
  }
}

TEST(ModelIo, InconsistentLayerDimsRejected) {
  auto j = model_to_json(small_trained_model(Direction::kPredictive));
  j["layers"][1]["rows"] = 13;
  try {
    model_from_json(j);
    FAIL() << "expected ModelLoadError";
  } catch (const ModelLoadError& e) {
    EXPECT_NE(std::string(e.what()).find("shape"), std::string::npos) << e.what();
  }
}

TEST(ModelIo, TaskDimsMustMatchLayers) {
  auto j = model_to_json(small_trained_model(Direction::kPredictive));
  j["task"] = "design";
  EXPECT_THROW(model_from_json(j), ModelLoadError);
}

TEST(ModelIo, VersionMismatchRejected) {
  auto j = model_to_json(small_trained_model(Direction::kPredictive));
  j["format_version"] = 2;
  EXPECT_THROW(model_from_json(j), ModelLoadError);
}

TEST(ModelIo, TruncatedAndMissingFilesRejected) {
  const std::string text = model_to_string(small_trained_model(Direction::kPredictive));
  EXPECT_THROW(model_from_string(text.substr(0, text.size() / 2)), ModelLoadError);
  auto j = model_to_json(small_trained_model(Direction::kPredictive));
  j.erase("scalers");
  EXPECT_THROW(model_from_json(j), ModelLoadError);
  EXPECT_THROW(load_model("/nonexistent/model.json"), ModelLoadError);
}

}  // namespace
}  // namespace fiberforge
