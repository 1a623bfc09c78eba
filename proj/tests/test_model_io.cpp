#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "model_builders.hpp"

using namespace ssmstream;
using namespace ssmstream::testing;

namespace {

const char* kMinimal = R"({
  "input_channels": 1,
  "window": {"l": 8, "s": 1},
  "nodes": [{"id": "c", "input": "input", "kind": "Conv1D", "kernel": 3, "dilation": 1, "stride": 1,
             "in_channels": 1, "out_channels": 1, "weights": [1, 2, 3]}]
})";

std::string expect_validation_node(const std::string& text) {
  try {
    parse_model_text(text);
  } catch (const ValidationError& e) {
    return e.node_id();
  }
  ADD_FAILURE() << "no ValidationError";
  return {};
}

}  // namespace

TEST(ModelIo, MinimalModel) {
  const auto g = parse_model_text(kMinimal);
  EXPECT_EQ(g.size(), 1u);
  EXPECT_EQ(g.node(0).op.weights, (std::vector<float>{1, 2, 3}));
  EXPECT_FALSE(g.node(0).op.bias.has_value());
}

TEST(ModelIo, WrongWeightCountNamesNode) {
  std::string text = kMinimal;
  text.replace(text.find("[1, 2, 3]"), 9, "[1, 2, 3, 4, 5, 6]");
  EXPECT_EQ(expect_validation_node(text), "c");
}

TEST(ModelIo, AddReferencingLaterNodeIsTopologyError) {
  const std::string text = R"({"input_channels": 1, "window": {"l": 8, "s": 1}, "nodes": [
    {"id": "a", "input": ["input", "b"], "kind": "Add", "in_channels": 1, "out_channels": 1},
    {"id": "b", "input": "a", "kind": "ReLU", "in_channels": 1, "out_channels": 1}]})";
  try {
    parse_model_text(text);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.node_id(), "a");
    EXPECT_NE(std::string(e.what()).find("topology"), std::string::npos);
  }
}

TEST(ModelIo, UnknownKeysRejected) {
  std::string text = kMinimal;
  text.replace(text.find("\"kernel\""), 0, "\"padding\": 1, ");
  EXPECT_EQ(expect_validation_node(text), "c");
  EXPECT_THROW(parse_model_text(R"({"input_channels": 1, "window": {"l": 8, "s": 1}, "nodes": [], "x": 1})"),
               ValidationError);
  EXPECT_THROW(parse_model_text(R"({"input_channels": 1, "window": {"l": 8, "s": 1, "k": 2}, "nodes": []})"),
               ValidationError);
}

TEST(ModelIo, MalformedJsonIsParseError) {
  EXPECT_THROW(parse_model_text("{\"input_channels\": 1,"), ParseError);
}

TEST(ModelIo, SeededWeightsAndBias) {
  const auto g = parse_model_text(R"({"input_channels": 2, "window": {"l": 4, "s": 2}, "nodes": [
    {"id": "d", "input": "input", "kind": "Dense", "in_channels": 2, "out_channels": 3,
     "weights": {"seed": 5, "scale": 0.25}, "bias": {"seed": 6, "scale": 0.5}}]})");
  EXPECT_EQ(g.node(0).op.weights, generate_weights({5, 0.25f}, 3 * 2 * 4));
  EXPECT_EQ(*g.node(0).op.bias, generate_weights({6, 0.5f}, 3));
}

TEST(ModelIo, KernelOnGlobalOpRejected) {
  EXPECT_THROW(parse_model_text(R"({"input_channels": 1, "window": {"l": 4, "s": 1}, "nodes": [
    {"id": "g", "input": "input", "kind": "GlobalMaxPool", "kernel": 2, "in_channels": 1, "out_channels": 1}]})"),
               ValidationError);
}

TEST(ModelIo, MissingFile) { EXPECT_THROW(load_model("/nonexistent/model.json"), std::runtime_error); }

TEST(ModelIo, RoundTripIsBitExact) {
  RandomGraphGenerator gen(42);
  const auto dir = std::filesystem::temp_directory_path() / "ssmstream_model_io";
  std::filesystem::create_directories(dir);
  for (int i = 0; i < 30; ++i) {
    const ModelGraph g = gen.next();
    EXPECT_EQ(parse_model(to_json(g)), g);
    // explicit weights survive a file round trip too
    std::vector<Node> nodes = g.nodes();
    for (auto& n : nodes) {
      n.op.weight_init.reset();
      n.op.bias_init.reset();
    }
    const auto explicit_g = ModelGraph::make(g.input_channels(), g.window(), nodes);
    const auto path = dir / ("m" + std::to_string(i) + ".json");
    save_model(explicit_g, path);
    const auto back = load_model(path);
    EXPECT_EQ(back, explicit_g);
    for (std::size_t k = 0; k < back.size(); ++k) EXPECT_EQ(back.node(k).op.weights, g.node(k).op.weights);
  }
  std::filesystem::remove_all(dir);
}
