#include <gtest/gtest.h>

#include <random>

#include "model_builders.hpp"

using namespace ssmstream;
using namespace ssmstream::testing;

namespace {

std::vector<TimeSeriesTensor> vanilla_outputs(const ModelGraph& g, const TimeSeriesTensor& stream) {
  std::vector<TimeSeriesTensor> out;
  for (const auto& w : slice(stream, g.window())) out.push_back(vanilla_forward(g, w).output);
  return out;
}

TimeSeriesTensor stream_for(const ModelGraph& g, std::size_t windows, std::uint64_t seed) {
  return random_stream(g.input_channels(), g.window().l + (windows - 1) * g.window().s, seed);
}

// Random chain of local operators; convs carry positive weights so the
// perturbation oracle sees every dependence.
ModelGraph random_positive_chain(std::mt19937_64& rng, std::size_t l) {
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  for (;;) {
    const std::size_t in_ch = pick(1, 3);
    ChainBuilder b(in_ch);
    std::size_t ch = in_ch;
    const std::size_t depth = pick(1, 5);
    for (std::size_t i = 0; i < depth; ++i) {
      const std::size_t kind = pick(0, 3);
      if (kind <= 1) {
        const std::size_t cout = pick(1, 3);
        b.add(positive_conv(rng, ch, cout, pick(1, 4), pick(1, 4), pick(1, 2)));
        ch = cout;
      } else {
        b.add(pool_op(kind == 2 ? OpKind::MaxPool : OpKind::AvgPool, ch, pick(1, 3), pick(1, 2)));
      }
    }
    try {
      return b.build({l, 1});
    } catch (const ValidationError&) {
    }
  }
}

}  // namespace

TEST(Property, StreamingMatchesVanillaOnRandomGraphs) {
  RandomGraphGenerator gen(2024);
  for (int i = 0; i < 40; ++i) {
    const auto g = gen.next();
    const auto stream = stream_for(g, 12, 500 + i);
    const auto r = run_stream(transform(g, analyze(g), Precision::FP32), stream, g.window());
    const auto ref = vanilla_outputs(g, stream);
    ASSERT_EQ(r.outputs.size(), ref.size());
    EXPECT_LE(max_relative_deviation(r.outputs, ref), 1e-5) << to_json(g).dump();
  }
}

TEST(Property, MaxOnlyGraphsAreBitExact) {
  RandomGraphOptions opt;
  opt.max_only = true;
  RandomGraphGenerator gen(77, opt);
  for (int i = 0; i < 30; ++i) {
    const auto g = gen.next();
    const auto stream = stream_for(g, 10, i);
    EXPECT_EQ(run_stream(transform(g, analyze(g), Precision::FP32), stream, g.window()).outputs,
              vanilla_outputs(g, stream));
  }
}

TEST(Property, GtaLessGraphsMatchVanilla) {
  RandomGraphOptions opt;
  opt.with_head = false;
  RandomGraphGenerator gen(31, opt);
  for (int i = 0; i < 30; ++i) {
    const auto g = gen.next();
    const auto stream = stream_for(g, 8, i);
    const auto r = run_stream(transform(g, analyze(g), Precision::FP32), stream, g.window());
    EXPECT_LE(max_relative_deviation(r.outputs, vanilla_outputs(g, stream)), 1e-5);
  }
}

TEST(Property, ComposedOutputLengthMatchesVanilla) {
  RandomGraphGenerator gen(13);
  for (int i = 0; i < 40; ++i) {
    const auto g = gen.next();
    const auto acts = vanilla_activations(g, random_stream(g.input_channels(), g.window().l, i));
    for (std::size_t k = 0; k < g.size(); ++k) {
      EXPECT_EQ(acts[k].length(), g.shape(k).out.length);
      if (is_local(g.node(k).op.kind) || g.node(k).op.kind == OpKind::ReLU || is_global(g.node(k).op.kind)) {
        EXPECT_EQ(acts[k].length(), output_length(g.node(k).op, g.shape(k).in.length));
      }
    }
  }
}

TEST(Property, ReceptiveFieldMatchesPerturbation) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 25; ++i) {
    const auto g = random_positive_chain(rng, 48);
    const auto rep = analyze(g);
    const auto base = random_stream(g.input_channels(), 48, i, 0.0f, 1.0f);
    const std::size_t last = g.size() - 1;
    const auto span = perturbation_span(g, last, 0, base);
    ASSERT_TRUE(span.has_value());
    EXPECT_EQ(span->first, 0u);
    EXPECT_EQ(span->second - span->first + 1, rep.per_node[last].end_to_end_field) << to_json(g).dump();
  }
}

TEST(Property, PerturbationOnlyAffectsWindowsContainingSample) {
  RandomGraphGenerator gen(8);
  for (int i = 0; i < 10; ++i) {
    const auto g = gen.next();
    const auto stream = stream_for(g, 6, i);
    const auto ref = vanilla_outputs(g, stream);
    const std::size_t t = (i * 7919) % stream.length();
    auto flipped = stream;
    for (std::size_t c = 0; c < stream.channels(); ++c) flipped.at(c, t) += 5.0f;
    const auto out = vanilla_outputs(g, flipped);
    const auto& w = g.window();
    for (std::size_t k = 0; k < ref.size(); ++k) {
      const bool contains = t >= k * w.s && t < k * w.s + w.l;
      if (!contains) {
        EXPECT_EQ(out[k], ref[k]) << "window " << k << " sample " << t;
      }
    }
  }
}

TEST(Property, WindowCountsMatchRunStream) {
  std::mt19937_64 rng(21);
  const auto g0 = tccnn_toy(64, 4);
  for (int i = 0; i < 20; ++i) {
    const std::size_t s = 4 * std::uniform_int_distribution<std::size_t>(1, 16)(rng);
    const std::size_t len = 64 + std::uniform_int_distribution<std::size_t>(0, 200)(rng);
    const auto g = g0.with_window({64, s});
    const auto stream = random_stream(1, len, i);
    EXPECT_EQ(run_stream(transform(g, analyze(g), Precision::FP32), stream, g.window()).outputs.size(),
              slice(stream, g.window()).size());
  }
}
