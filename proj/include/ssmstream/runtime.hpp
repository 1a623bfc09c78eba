#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssmstream/errors.hpp"
#include "ssmstream/kernels.hpp"
#include "ssmstream/oracle.hpp"
#include "ssmstream/plan.hpp"
#include "ssmstream/run_metrics.hpp"
#include "ssmstream/tensor.hpp"

namespace ssmstream {

enum class Stage { Preheat, Streaming };

// Drives one StreamingPlan over a live stream: preheat on the first window,
// then one step per window stride.
class StreamSession {
 public:
  explicit StreamSession(StreamingPlan plan) : plan_(std::move(plan)), sample_(plan_.graph->input_channels()) {}

  TimeSeriesTensor preheat(const TimeSeriesTensor& window) {
    if (stage_ != Stage::Preheat || samples_consumed_ != 0) throw std::logic_error("preheat already ran");
    const ModelGraph& g = *plan_.graph;
    check_shape(window, g.window().l, "preheat window");
    for (std::size_t t = 0; t < window.length(); ++t) {
      window.column(t, sample_);
      tick(preheat_counts_);
    }
    samples_consumed_ = window.length();
    stage_ = Stage::Streaming;
    pending_ = 0;
    ++outputs_emitted_;
    return fire(preheat_counts_);
  }

  // Consumes s new samples; returns the next window's output once the GTA
  // trigger is reached.
  std::optional<TimeSeriesTensor> step(const TimeSeriesTensor& new_samples) {
    if (stage_ != Stage::Streaming) throw std::logic_error("step called before preheat");
    check_shape(new_samples, plan_.graph->window().s, "step input");
    for (std::size_t t = 0; t < new_samples.length(); ++t) {
      new_samples.column(t, sample_);
      tick(streaming_counts_);
    }
    samples_consumed_ += new_samples.length();
    ++steps_;
    if (pending_ < plan_.trigger) return std::nullopt;
    pending_ -= plan_.trigger;
    ++outputs_emitted_;
    return fire(streaming_counts_);
  }

  const StreamingPlan& plan() const noexcept { return plan_; }
  Stage stage() const noexcept { return stage_; }
  std::size_t samples_consumed() const noexcept { return samples_consumed_; }
  std::size_t outputs_emitted() const noexcept { return outputs_emitted_; }
  std::size_t steps() const noexcept { return steps_; }
  const OpCounts& preheat_counts() const noexcept { return preheat_counts_; }
  const OpCounts& streaming_counts() const noexcept { return streaming_counts_; }

 private:
  void check_shape(const TimeSeriesTensor& x, std::size_t length, const char* what) const {
    const std::size_t ch = plan_.graph->input_channels();
    if (x.channels() != ch || x.length() != length) {
      throw std::invalid_argument(std::string(what) + " is " + std::to_string(x.channels()) + "x" +
                                  std::to_string(x.length()) + ", expected " + std::to_string(ch) + "x" +
                                  std::to_string(length));
    }
  }

  struct Column {
    std::span<const float> data;
    bool fired;
  };

  Column producer(int idx) const {
    if (idx == kStreamIndex) return {sample_, true};
    const CascadeStage& st = plan_.cascade[static_cast<std::size_t>(idx)];
    return {st.out, st.fired};
  }

  void tick(OpCounts& counts) {
    for (auto& st : plan_.cascade) {
      const Column in = producer(st.input);
      switch (st.kind) {
        case StageKind::Ssm:
          st.fired = in.fired && st.ssm->push(in.data, st.out, plan_.scratch, counts);
          break;
        case StageKind::ReLU:
          st.fired = in.fired;
          if (st.fired) {
            for (std::size_t c = 0; c < st.channels; ++c) st.out[c] = in.data[c] > 0.0f ? in.data[c] : 0.0f;
            counts.compares += st.channels;
          }
          break;
        case StageKind::Add: {
          // Until the later operand starts, only the leading one fires.
          const Column side = producer(st.side);
          st.fired = in.fired && side.fired;
          if (st.fired) {
            for (std::size_t c = 0; c < st.channels; ++c) st.out[c] = in.data[c] + side.data[c];
            counts.macs += st.channels;
          }
          break;
        }
      }
    }
    const Column b = producer(plan_.boundary_producer);
    if (!b.fired) return;
    if (plan_.pool) {
      plan_.pool->push(b.data, counts);
    } else {
      plan_.gta_cache->push(b.data);
    }
    ++pending_;
  }

  template <class F>
  void with_input(int idx, std::size_t channels, F&& f) const {
    if (idx == kCacheIndex) {
      const ColumnRing& ring = *plan_.gta_cache;
      f([&ring](std::size_t t, std::size_t c) { return ring.at(t, c); });
    } else {
      const float* act = plan_.gta_subgraph[static_cast<std::size_t>(idx) - *plan_.gta_index].act.data();
      f([act, channels](std::size_t t, std::size_t c) { return act[t * channels + c]; });
    }
  }

  TimeSeriesTensor fire(OpCounts& counts) {
    const ModelGraph& g = *plan_.graph;
    if (plan_.boundary == BoundaryKind::OutputCollector) {
      std::vector<float> cols(plan_.feature_length * plan_.feature_channels);
      plan_.gta_cache->flatten(cols);
      return TimeSeriesTensor::from_interleaved(plan_.feature_channels, cols);
    }
    for (std::size_t k = 0; k < plan_.gta_subgraph.size(); ++k) {
      GtaStep& step = plan_.gta_subgraph[k];
      const OperatorSpec& op = g.node(step.node).op;
      const NodeShape& sh = g.shape(step.node);
      const std::size_t och = op.out_channels;
      const std::size_t ich = sh.in_channels;
      float* out = step.act.data();
      if (k == 0 && plan_.pool) {
        plan_.pool->evaluate(std::span<float>(out, och), counts);
        continue;
      }
      switch (op.kind) {
        case OpKind::ReLU:
          with_input(step.input, ich, [&](auto x) {
            for (std::size_t t = 0; t < sh.out.length; ++t)
              for (std::size_t c = 0; c < och; ++c) {
                const float v = x(t, c);
                out[t * och + c] = v > 0.0f ? v : 0.0f;
              }
          });
          counts.compares += och * sh.out.length;
          break;
        case OpKind::Add: {
          const std::size_t skip_a = (sh.out.offset - sh.in.offset) / sh.out.stride;
          const std::size_t skip_b = (sh.out.offset - g.axis_of(sh.side).offset) / sh.out.stride;
          with_input(step.input, ich, [&](auto a) {
            with_input(step.side, ich, [&](auto b) {
              for (std::size_t t = 0; t < sh.out.length; ++t)
                for (std::size_t c = 0; c < och; ++c) out[t * och + c] = a(skip_a + t, c) + b(skip_b + t, c);
            });
          });
          counts.macs += och * sh.out.length;
          break;
        }
        default: {
          const std::size_t stride = is_local(op.kind) ? op.stride : 1;
          with_input(step.input, ich, [&](auto x) {
            for (std::size_t p = 0; p < sh.out.length; ++p) {
              const std::size_t base = p * stride;
              eval_column(op, step.tau, [&](std::size_t j, std::size_t c) { return x(base + j, c); },
                          std::span<float>(out + p * och, och), plan_.scratch);
            }
          });
          counts += column_cost(op, step.tau).scaled(sh.out.length);
          break;
        }
      }
    }
    const GtaStep& last = plan_.gta_subgraph.back();
    return TimeSeriesTensor::from_interleaved(g.node(last.node).op.out_channels, last.act);
  }

  StreamingPlan plan_;
  std::vector<float> sample_;
  Stage stage_ = Stage::Preheat;
  std::size_t samples_consumed_ = 0;
  std::size_t outputs_emitted_ = 0;
  std::size_t steps_ = 0;
  std::size_t pending_ = 0;
  OpCounts preheat_counts_;
  OpCounts streaming_counts_;
};

struct StreamResult {
  std::vector<TimeSeriesTensor> outputs;
  RunMetrics metrics;
  OpCounts preheat_counts;
  OpCounts streaming_counts;
  std::size_t steps = 0;
};

// Per-window MAC/compare counts of the full forward pass.
inline OpCounts vanilla_counts(const ModelGraph& g) {
  OpCounts n;
  vanilla_activations(g, TimeSeriesTensor(g.input_channels(), g.window().l), &n);
  return n;
}

// Preheat on the first window, then one step per further window.
inline StreamResult run_stream(const StreamingPlan& plan, const TimeSeriesTensor& stream, const WindowConfig& cfg) {
  const ModelGraph& g = *plan.graph;
  if (!(cfg == g.window())) {
    throw ValidationError("window l=" + std::to_string(cfg.l) + ", s=" + std::to_string(cfg.s) +
                          " differs from the plan's l=" + std::to_string(g.window().l) +
                          ", s=" + std::to_string(g.window().s));
  }
  WindowSlicer slicer(cfg, stream);
  StreamSession session(plan);
  StreamResult r;
  r.outputs.reserve(slicer.count());
  r.outputs.push_back(session.preheat(stream.slice(0, cfg.l)));
  for (std::size_t k = 2; k <= slicer.count(); ++k) {
    auto y = session.step(stream.slice(slicer.start(k) + cfg.l - cfg.s, cfg.s));
    if (!y) throw std::logic_error("GTA trigger did not fire on an aligned step");
    r.outputs.push_back(std::move(*y));
  }
  r.preheat_counts = session.preheat_counts();
  r.streaming_counts = session.streaming_counts();
  r.steps = session.steps();

  RunMetrics& m = r.metrics;
  m.preheat_macs = r.preheat_counts.macs;
  m.preheat_compares = r.preheat_counts.compares;
  if (r.steps == 0) {
    m.streaming_macs_per_window = static_cast<double>(m.preheat_macs);
    m.streaming_compares_per_window = static_cast<double>(m.preheat_compares);
  } else {
    m.streaming_macs_per_window = static_cast<double>(r.streaming_counts.macs) / static_cast<double>(r.steps);
    m.streaming_compares_per_window = static_cast<double>(r.streaming_counts.compares) / static_cast<double>(r.steps);
  }
  m.vanilla_macs_per_window = vanilla_counts(g).macs;
  m.persistent_state_bytes = plan.persistent_state_bytes();
  m.gta_cache_bytes = plan.cache_bytes();
  m.transient_bytes = plan.transient_bytes();
  m.vanilla_peak_activation_bytes = vanilla_peak_activation_bytes(g);
  m.outputs = r.outputs.size();
  m.finalize();
  return r;
}

}  // namespace ssmstream
