#include <gtest/gtest.h>

#include <deque>
#include <random>

#include "model_builders.hpp"

using namespace ssmstream;
using namespace ssmstream::testing;

TEST(ColumnRing, FlattenReproducesLastColumns) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<float> u(-1, 1);
  for (std::size_t tau : {1u, 2u, 5u, 9u}) {
    ColumnRing ring(tau, 3, Precision::FP32);
    std::deque<std::vector<float>> history;
    for (int i = 0; i < 40; ++i) {
      std::vector<float> col{u(rng), u(rng), u(rng)};
      ring.push(col);
      history.push_back(col);
      if (history.size() > tau) history.pop_front();
      ASSERT_EQ(ring.size(), history.size());
      ASSERT_LE(ring.size(), tau);
      std::vector<float> flat(ring.size() * 3);
      ring.flatten(flat);
      for (std::size_t j = 0; j < history.size(); ++j)
        for (std::size_t c = 0; c < 3; ++c) ASSERT_EQ(flat[j * 3 + c], history[j][c]);
    }
  }
}

TEST(ColumnRing, Bf16StoresRoundedValues) {
  ColumnRing ring(2, 1, Precision::BF16);
  const float x = 1.0f + 1.0f / 1024.0f;
  ring.push(std::vector<float>{x});
  EXPECT_EQ(ring.at(0, 0), bf16_round(x));
  EXPECT_EQ(ring.bytes(), 4u);
}

TEST(SsmNode, StateBytes) {
  const auto op = conv_op(8, 8, 3, 2);
  EXPECT_EQ(SsmNode(op, receptive_field(op), 1, Precision::FP32).state_bytes(), 160u);
  EXPECT_EQ(SsmNode(op, receptive_field(op), 1, Precision::BF16).state_bytes(), 80u);
}

TEST(SsmNode, GateFiresAfterFillThenEveryStride) {
  const auto op = pool_op(OpKind::MaxPool, 1, 3, 2);
  SsmNode node(op, 3, 2, Precision::FP32);
  std::vector<int> fired;
  for (int i = 1; i <= 10; ++i) {
    if (node.insert(std::vector<float>{static_cast<float>(i)})) fired.push_back(i);
    EXPECT_LE(node.fill_count(), node.tau());
  }
  EXPECT_EQ(fired, (std::vector<int>{3, 5, 7, 9}));
}

TEST(SsmNode, ConvMatchesDirectDotProduct) {
  // newest sample pairs with w0
  OperatorSpec op = conv_op(1, 1, 2);
  op.weights = {1.0f, -1.0f};
  SsmNode node(op, 2, 1, Precision::FP32);
  std::vector<float> out(1), scratch;
  OpCounts n;
  std::vector<float> got;
  for (float v : {3.0f, 1.0f, 4.0f, 1.0f, 5.0f})
    if (node.push(std::vector<float>{v}, out, scratch, n)) got.push_back(out[0]);
  EXPECT_EQ(got, (std::vector<float>{-2, 3, -3, 4}));
  EXPECT_EQ(n.macs, 4u * 2u);
}

TEST(TwoStagePool, StateColumnsAndBytes) {
  TwoStageGlobalPool p(OpKind::GlobalAvgPool, 512, 16, 1, Precision::FP32);
  EXPECT_EQ(p.state_columns(), 33u);
  EXPECT_EQ(p.state_bytes(), 132u);
  EXPECT_THROW(TwoStageGlobalPool(OpKind::GlobalAvgPool, 512, 15, 1, Precision::FP32), std::invalid_argument);
}

TEST(TwoStagePool, AgreesWithDirectReduction) {
  std::mt19937 rng(8);
  std::uniform_real_distribution<float> u(-10, 10);
  for (OpKind kind : {OpKind::GlobalMaxPool, OpKind::GlobalAvgPool}) {
    TwoStageGlobalPool pool(kind, 64, 8, 2, Precision::FP32);
    std::deque<std::array<float, 2>> window;
    OpCounts n;
    for (int i = 0; i < 64 * 5; ++i) {
      const std::array<float, 2> col{u(rng), u(rng)};
      pool.push(col, n);
      window.push_back(col);
      if (window.size() > 64) window.pop_front();
      if (window.size() < 64 || (i + 1) % 8 != 0) continue;
      std::array<float, 2> got{};
      pool.evaluate(got, n);
      for (std::size_t c = 0; c < 2; ++c) {
        double ref = kind == OpKind::GlobalMaxPool ? -1e30 : 0.0;
        for (const auto& w : window) ref = kind == OpKind::GlobalMaxPool ? std::max<double>(ref, w[c]) : ref + w[c];
        if (kind == OpKind::GlobalMaxPool) {
          EXPECT_EQ(got[c], static_cast<float>(ref));
        } else {
          ref /= 64.0;
          EXPECT_LE(std::abs(got[c] - ref), 1e-6 * std::max(1.0, std::abs(ref)) + 1e-6);
        }
      }
    }
  }
}
