#include <gtest/gtest.h>

#include <set>

#include "model_builders.hpp"

using namespace ssmstream;
using namespace ssmstream::testing;

namespace {

// New GTA-input columns between two consecutive windows, found by comparing
// the vanilla feature maps of W_k and W_{k+1}. A positive-weight copy on a
// ramp input makes every column value unique to its time step.
std::size_t new_columns_between_windows(const ModelGraph& model) {
  const ModelGraph g = positive_variant(model);
  const auto rep = analyze(g);
  const std::size_t l = g.window().l, s = g.window().s;
  const auto stream = ramp_stream(g.input_channels(), l + s);
  const int producer = g.shape(*rep.gta_index).input;
  auto features = [&](std::size_t start) {
    const auto w = stream.slice(start, l);
    if (producer == kStreamIndex) return w;
    return vanilla_activations(g, w)[static_cast<std::size_t>(producer)];
  };
  const auto a = features(0), b = features(s);
  std::set<float> seen;
  for (std::size_t t = 0; t < a.length(); ++t) seen.insert(a.at(0, t));
  EXPECT_EQ(seen.size(), a.length()) << "feature columns are not distinct";
  std::size_t fresh = 0;
  for (std::size_t t = 0; t < b.length(); ++t) fresh += seen.count(b.at(0, t)) == 0;
  return fresh;
}

}  // namespace

TEST(ReceptiveField, TableValues) {
  EXPECT_EQ(receptive_field(conv_op(1, 1, 3, 2)), 5u);
  EXPECT_EQ(receptive_field(conv_op(1, 1, 1, 7)), 1u);
  EXPECT_EQ(receptive_field(pool_op(OpKind::AvgPool, 1, 4)), 4u);
  EXPECT_EQ(receptive_field(pool_op(OpKind::MaxPool, 1, 3, 2)), 3u);
  EXPECT_EQ(receptive_field(relu_op(1)), 1u);
  EXPECT_EQ(receptive_field(add_op(1, "x")), 1u);
  EXPECT_EQ(receptive_field(pool_op(OpKind::GlobalMaxPool, 1)), kGlobalField);
  EXPECT_EQ(receptive_field(dense_op(1, 1)), kGlobalField);
  EXPECT_EQ(receptive_field(attention_op(1, 1)), kGlobalField);
}

TEST(ReceptiveField, MonotoneInKernelAndDilation) {
  for (std::size_t k = 1; k < 8; ++k)
    for (std::size_t d = 1; d < 8; ++d) {
      EXPECT_LE(receptive_field(conv_op(1, 1, k, d)), receptive_field(conv_op(1, 1, k + 1, d)));
      EXPECT_LE(receptive_field(conv_op(1, 1, k, d)), receptive_field(conv_op(1, 1, k, d + 1)));
    }
}

TEST(Analyze, ConvReluPoolDense) {
  ChainBuilder b(1);
  b.add(seeded(conv_op(1, 2, 3), 1, 1.0f), "conv")
      .add(relu_op(2), "relu")
      .add(pool_op(OpKind::GlobalAvgPool, 2), "gap")
      .add(seeded(dense_op(2, 1), 2, 1.0f), "dense");
  const auto r = analyze(b.build({64, 1}));
  ASSERT_TRUE(r.gta_boundary.has_value());
  EXPECT_EQ(*r.gta_boundary, "gap");
  EXPECT_EQ(r.feature_length_at_gta, 62u);
  EXPECT_EQ(r.per_node[2].tau, 62u);
  EXPECT_TRUE(r.per_node[1].in_ssm_subgraph);
  EXPECT_FALSE(r.per_node[2].in_ssm_subgraph);
  EXPECT_FALSE(r.per_node[3].in_ssm_subgraph);
  EXPECT_EQ(r.ssm_node_count(), 2u);
  EXPECT_EQ(r.per_node[3].tau, 1u);  // Dense over the pooled length-1 map
}

TEST(Analyze, DenseAloneIsDegenerate) {
  ChainBuilder b(2);
  b.add(seeded(dense_op(2, 1), 1, 1.0f), "d");
  const auto r = analyze(b.build({16, 4}));
  EXPECT_EQ(r.gta_index, std::optional<std::size_t>(0));
  EXPECT_EQ(r.ssm_node_count(), 0u);
  EXPECT_EQ(r.feature_length_at_gta, 16u);
  EXPECT_EQ(r.gta_trigger_stride, std::optional<std::size_t>(4));
}

TEST(Analyze, WaveNetHasNoBoundary) {
  const auto r = analyze(wavenet_toy());
  EXPECT_FALSE(r.gta_boundary.has_value());
  EXPECT_EQ(r.ssm_node_count(), 24u);
  EXPECT_EQ(r.per_node.back().end_to_end_field, 256u);
  for (const auto& n : r.per_node) EXPECT_TRUE(n.in_ssm_subgraph);
}

TEST(Analyze, OnlyFirstGlobalIsBoundary) {
  ChainBuilder b(2);
  b.add(seeded(dense_op(2, 2), 1, 1.0f), "d0").add(seeded(dense_op(2, 1), 2, 1.0f), "d1");
  const auto r = analyze(b.build({8, 1}));
  EXPECT_EQ(*r.gta_boundary, "d0");
  EXPECT_TRUE(r.per_node[1].is_gta);
}

TEST(Trigger, DownsamplingChainGivesOne) {
  ChainBuilder b(1);
  b.add(seeded(conv_op(1, 1, 3, 1, 2), 1, 1.0f), "conv")
      .add(pool_op(OpKind::MaxPool, 1, 2, 2), "pool")
      .add(pool_op(OpKind::GlobalMaxPool, 1), "gmp");
  const auto g = b.build({32, 4});
  EXPECT_EQ(compute_gta_trigger(g, analyze(g)), 1u);
  EXPECT_EQ(new_columns_between_windows(g), 1u);
}

TEST(Trigger, NoDownsamplingGivesWindowStride) {
  ChainBuilder b(1);
  b.add(seeded(conv_op(1, 1, 3), 1, 1.0f), "conv").add(pool_op(OpKind::GlobalAvgPool, 1), "gap");
  const auto g = b.build({16, 3});
  EXPECT_EQ(compute_gta_trigger(g, analyze(g)), 3u);
  EXPECT_EQ(new_columns_between_windows(g), 3u);
}

TEST(Trigger, MisalignedStrideIsError) {
  ChainBuilder b(1);
  b.add(seeded(conv_op(1, 1, 3, 1, 2), 1, 1.0f), "conv").add(pool_op(OpKind::GlobalAvgPool, 1), "gap");
  const auto g = b.build({16, 3});
  const auto r = analyze(g);
  EXPECT_FALSE(r.gta_trigger_stride.has_value());
  try {
    compute_gta_trigger(g, r);
    FAIL();
  } catch (const AlignmentError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("3"), std::string::npos);
    EXPECT_NE(msg.find("2"), std::string::npos);
    EXPECT_NE(msg.find("align with downsampling"), std::string::npos);
  }
}

TEST(Trigger, BruteForceOnRandomGraphs) {
  RandomGraphGenerator gen(99);
  for (int i = 0; i < 40; ++i) {
    const auto g = gen.next();
    const auto r = analyze(g);
    ASSERT_TRUE(r.gta_trigger_stride.has_value());
    // with little overlap a window can hold fewer columns than arrive per step
    const std::size_t n_f = g.shape(*r.gta_index).in.length;
    EXPECT_EQ(std::min(*r.gta_trigger_stride, n_f), new_columns_between_windows(g)) << to_json(g).dump();
  }
}

TEST(Analyze, JsonReport) {
  const auto j = to_json(analyze(tccnn_toy()));
  EXPECT_EQ(j["gta_boundary"], "gap");
  EXPECT_EQ(j["feature_length_at_gta"], 254);
  EXPECT_EQ(j["cumulative_stride_at_gta"], 4);
  EXPECT_EQ(j["gta_trigger_stride"], 16);
  EXPECT_EQ(j["nodes"].size(), 10u);
  EXPECT_EQ(j["nodes"][8]["subgraph"], "gta");
}
