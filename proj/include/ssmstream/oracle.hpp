#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ssmstream/graph.hpp"
#include "ssmstream/kernels.hpp"
#include "ssmstream/tensor.hpp"

namespace ssmstream {

// Overlapping windows W_k = samples [(k-1)s, (k-1)s + l) of a recorded stream.
class WindowSlicer {
 public:
  WindowSlicer(WindowConfig cfg, const TimeSeriesTensor& stream) : cfg_(cfg), stream_(&stream) {
    cfg_.validate();
    if (stream.length() < cfg_.l) {
      throw std::invalid_argument("stream of length " + std::to_string(stream.length()) +
                                  " is shorter than the window " + std::to_string(cfg_.l));
    }
  }

  std::size_t count() const { return cfg_.window_count(stream_->length()); }
  // First sample of window k (1-indexed), 0-based.
  std::size_t start(std::size_t k) const { return (k - 1) * cfg_.s; }
  TimeSeriesTensor window(std::size_t k) const { return stream_->slice(start(k), cfg_.l); }

 private:
  WindowConfig cfg_;
  const TimeSeriesTensor* stream_;
};

inline std::vector<TimeSeriesTensor> slice(const TimeSeriesTensor& stream, const WindowConfig& cfg) {
  WindowSlicer slicer(cfg, stream);
  std::vector<TimeSeriesTensor> out;
  out.reserve(slicer.count());
  for (std::size_t k = 1; k <= slicer.count(); ++k) out.push_back(slicer.window(k));
  return out;
}

struct VanillaRun {
  TimeSeriesTensor output;
  OpCounts counts;
  std::size_t peak_activation_bytes = 0;
};

namespace vanilla {

inline TimeSeriesTensor conv1d(const OperatorSpec& op, const TimeSeriesTensor& x, std::size_t len, OpCounts& n) {
  const std::size_t k = op.kernel, d = op.dilation, cin = op.in_channels;
  const std::size_t span = (k - 1) * d;
  TimeSeriesTensor y(op.out_channels, len);
  for (std::size_t o = 0; o < op.out_channels; ++o) {
    for (std::size_t p = 0; p < len; ++p) {
      const std::size_t newest = p * op.stride + span;
      float acc = op.bias ? (*op.bias)[o] : 0.0f;
      for (std::size_t i = 0; i < cin; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          acc += op.weights[(o * cin + i) * k + j] * x.at(i, newest - j * d);
          ++n.macs;
        }
      }
      y.at(o, p) = acc;
    }
  }
  return y;
}

inline TimeSeriesTensor pool(const OperatorSpec& op, const TimeSeriesTensor& x, std::size_t kernel, std::size_t stride,
                             std::size_t len, bool is_max, OpCounts& n) {
  TimeSeriesTensor y(x.channels(), len);
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (std::size_t p = 0; p < len; ++p) {
      if (is_max) {
        float m = -std::numeric_limits<float>::infinity();
        for (std::size_t j = 0; j < kernel; ++j) {
          m = std::max(m, x.at(c, p * stride + j));
          ++n.compares;
        }
        y.at(c, p) = m;
      } else {
        float acc = 0.0f;
        for (std::size_t j = 0; j < kernel; ++j) {
          acc += x.at(c, p * stride + j);
          ++n.macs;
        }
        y.at(c, p) = acc * (1.0f / static_cast<float>(kernel));
      }
    }
  }
  (void)op;
  return y;
}

inline TimeSeriesTensor dense(const OperatorSpec& op, const TimeSeriesTensor& x, OpCounts& n) {
  // flattened feature index = c * N + t, identical to the channel-major layout
  const auto flat = x.data();
  TimeSeriesTensor y(op.out_channels, 1);
  for (std::size_t o = 0; o < op.out_channels; ++o) {
    float acc = op.bias ? (*op.bias)[o] : 0.0f;
    for (std::size_t f = 0; f < flat.size(); ++f) acc += op.weights[o * flat.size() + f] * flat[f];
    n.macs += flat.size();
    y.at(o, 0) = acc;
  }
  return y;
}

inline TimeSeriesTensor attention(const OperatorSpec& op, const TimeSeriesTensor& x, OpCounts& n) {
  const std::size_t c = x.channels(), len = x.length();
  auto project = [&](std::size_t which) {
    TimeSeriesTensor p(c, len);
    const float* w = op.weights.data() + which * c * c;
    for (std::size_t a = 0; a < c; ++a)
      for (std::size_t t = 0; t < len; ++t) {
        float acc = 0.0f;
        for (std::size_t b = 0; b < c; ++b) acc += w[a * c + b] * x.at(b, t);
        p.at(a, t) = acc;
      }
    n.macs += c * c * len;
    return p;
  };
  const TimeSeriesTensor q = project(0), k = project(1), v = project(2);
  const float scale = 1.0f / std::sqrt(static_cast<float>(c));
  std::vector<float> weights(len * len);  // [t][u], rows sum to 1
  for (std::size_t t = 0; t < len; ++t) {
    float m = -std::numeric_limits<float>::infinity();
    for (std::size_t u = 0; u < len; ++u) {
      float dot = 0.0f;
      for (std::size_t a = 0; a < c; ++a) dot += q.at(a, t) * k.at(a, u);
      weights[t * len + u] = dot * scale;
      m = std::max(m, weights[t * len + u]);
    }
    float total = 0.0f;
    for (std::size_t u = 0; u < len; ++u) {
      weights[t * len + u] = std::exp(weights[t * len + u] - m);
      total += weights[t * len + u];
    }
    for (std::size_t u = 0; u < len; ++u) weights[t * len + u] /= total;
  }
  n.macs += len * len * c;
  TimeSeriesTensor attended(c, len);
  for (std::size_t a = 0; a < c; ++a)
    for (std::size_t t = 0; t < len; ++t) {
      float acc = 0.0f;
      for (std::size_t u = 0; u < len; ++u) acc += weights[t * len + u] * v.at(a, u);
      attended.at(a, t) = acc;
    }
  n.macs += len * len * c;
  std::vector<float> mean(c, 0.0f);
  for (std::size_t a = 0; a < c; ++a) {
    for (std::size_t t = 0; t < len; ++t) mean[a] += attended.at(a, t);
    mean[a] /= static_cast<float>(len);
  }
  n.macs += len * c;
  TimeSeriesTensor y(op.out_channels, 1);
  const float* wo = op.weights.data() + 3 * c * c;
  for (std::size_t o = 0; o < op.out_channels; ++o) {
    float acc = op.bias ? (*op.bias)[o] : 0.0f;
    for (std::size_t a = 0; a < c; ++a) acc += wo[o * c + a] * mean[a];
    y.at(o, 0) = acc;
  }
  n.macs += op.out_channels * c;
  return y;
}

inline TimeSeriesTensor relu(const TimeSeriesTensor& x, OpCounts& n) {
  TimeSeriesTensor y = x;
  for (float& v : y.data()) v = v > 0.0f ? v : 0.0f;
  n.compares += x.size();
  return y;
}

inline TimeSeriesTensor add(const TimeSeriesTensor& a, const TimeAxis& ax, const TimeSeriesTensor& b,
                            const TimeAxis& bx, const TimeAxis& out, OpCounts& n) {
  const std::size_t skip_a = (out.offset - ax.offset) / out.stride;
  const std::size_t skip_b = (out.offset - bx.offset) / out.stride;
  TimeSeriesTensor y(a.channels(), out.length);
  for (std::size_t c = 0; c < a.channels(); ++c)
    for (std::size_t t = 0; t < out.length; ++t) y.at(c, t) = a.at(c, skip_a + t) + b.at(c, skip_b + t);
  n.macs += y.size();
  return y;
}

inline std::size_t tensor_bytes(std::size_t channels, std::size_t length) { return channels * length * sizeof(float); }

// Index of the last node reading each producer; the sink stays live to the end.
inline std::vector<std::size_t> last_consumers(const ModelGraph& g) {
  const std::size_t n = g.size();
  std::vector<std::size_t> last(n + 1, 0);  // slot 0 = stream, slot i+1 = node i
  for (std::size_t i = 0; i < n; ++i) {
    last[i + 1] = i;
    const auto& sh = g.shape(i);
    last[static_cast<std::size_t>(sh.input + 1)] = std::max(last[static_cast<std::size_t>(sh.input + 1)], i);
    if (g.node(i).op.kind == OpKind::Add) {
      last[static_cast<std::size_t>(sh.side + 1)] = std::max(last[static_cast<std::size_t>(sh.side + 1)], i);
    }
  }
  last[n] = n;
  return last;
}

}  // namespace vanilla

// Peak bytes of simultaneously live activations under sequential execution.
// The input window counts as an activation; weights do not.
inline std::size_t vanilla_peak_activation_bytes(const ModelGraph& g) {
  const auto last = vanilla::last_consumers(g);
  std::vector<std::size_t> bytes(g.size() + 1);
  bytes[0] = vanilla::tensor_bytes(g.input_channels(), g.window().l);
  for (std::size_t i = 0; i < g.size(); ++i) {
    bytes[i + 1] = vanilla::tensor_bytes(g.node(i).op.out_channels, g.shape(i).out.length);
  }
  std::size_t peak = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::size_t live = bytes[i + 1];
    for (std::size_t slot = 0; slot <= i; ++slot) {
      if (last[slot] >= i) live += bytes[slot];
    }
    peak = std::max(peak, live);
  }
  return peak;
}

// Every node's full output for one window, in node order.
inline std::vector<TimeSeriesTensor> vanilla_activations(const ModelGraph& g, const TimeSeriesTensor& window,
                                                         OpCounts* counts = nullptr) {
  if (window.channels() != g.input_channels() || window.length() != g.window().l) {
    throw std::invalid_argument("window shape " + std::to_string(window.channels()) + "x" +
                                std::to_string(window.length()) + " does not match model input " +
                                std::to_string(g.input_channels()) + "x" + std::to_string(g.window().l));
  }
  OpCounts local;
  OpCounts& n = counts ? *counts : local;
  std::vector<TimeSeriesTensor> acts;
  acts.reserve(g.size());
  auto producer = [&](int idx) -> const TimeSeriesTensor& { return idx == kStreamIndex ? window : acts[idx]; };
  for (std::size_t i = 0; i < g.size(); ++i) {
    const OperatorSpec& op = g.node(i).op;
    const NodeShape& sh = g.shape(i);
    const TimeSeriesTensor& x = producer(sh.input);
    switch (op.kind) {
      case OpKind::Conv1D: acts.push_back(vanilla::conv1d(op, x, sh.out.length, n)); break;
      case OpKind::MaxPool: acts.push_back(vanilla::pool(op, x, op.kernel, op.stride, sh.out.length, true, n)); break;
      case OpKind::AvgPool: acts.push_back(vanilla::pool(op, x, op.kernel, op.stride, sh.out.length, false, n)); break;
      case OpKind::GlobalMaxPool: acts.push_back(vanilla::pool(op, x, x.length(), 1, 1, true, n)); break;
      case OpKind::GlobalAvgPool: acts.push_back(vanilla::pool(op, x, x.length(), 1, 1, false, n)); break;
      case OpKind::Dense: acts.push_back(vanilla::dense(op, x, n)); break;
      case OpKind::Attention: acts.push_back(vanilla::attention(op, x, n)); break;
      case OpKind::ReLU: acts.push_back(vanilla::relu(x, n)); break;
      case OpKind::Add:
        acts.push_back(vanilla::add(x, sh.in, producer(sh.side), g.axis_of(sh.side), sh.out, n));
        break;
    }
  }
  return acts;
}

// Full forward pass over one window of length l.
inline VanillaRun vanilla_forward(const ModelGraph& g, const TimeSeriesTensor& window) {
  VanillaRun run;
  auto acts = vanilla_activations(g, window, &run.counts);
  run.output = std::move(acts.back());
  run.peak_activation_bytes = vanilla_peak_activation_bytes(g);
  return run;
}

}  // namespace ssmstream
