#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ssmstream/errors.hpp"

namespace ssmstream {

enum class OpKind { Conv1D, MaxPool, AvgPool, GlobalMaxPool, GlobalAvgPool, Dense, Attention, ReLU, Add };

inline std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::Conv1D: return "Conv1D";
    case OpKind::MaxPool: return "MaxPool";
    case OpKind::AvgPool: return "AvgPool";
    case OpKind::GlobalMaxPool: return "GlobalMaxPool";
    case OpKind::GlobalAvgPool: return "GlobalAvgPool";
    case OpKind::Dense: return "Dense";
    case OpKind::Attention: return "Attention";
    case OpKind::ReLU: return "ReLU";
    case OpKind::Add: return "Add";
  }
  return "?";
}

inline std::optional<OpKind> parse_op_kind(std::string_view name) {
  for (OpKind k : {OpKind::Conv1D, OpKind::MaxPool, OpKind::AvgPool, OpKind::GlobalMaxPool,
                   OpKind::GlobalAvgPool, OpKind::Dense, OpKind::Attention, OpKind::ReLU, OpKind::Add}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

// Sliding kernel over time: Conv1D, MaxPool, AvgPool.
inline bool is_local(OpKind k) { return k == OpKind::Conv1D || k == OpKind::MaxPool || k == OpKind::AvgPool; }
inline bool is_pointwise(OpKind k) { return k == OpKind::ReLU || k == OpKind::Add; }
// Consumes the whole input time axis and emits a single column.
inline bool is_global(OpKind k) {
  return k == OpKind::GlobalMaxPool || k == OpKind::GlobalAvgPool || k == OpKind::Dense || k == OpKind::Attention;
}
inline bool has_weights(OpKind k) { return k == OpKind::Conv1D || k == OpKind::Dense || k == OpKind::Attention; }

// Reproducible weight source: uniform in [-scale, scale) from a 64-bit Mersenne twister.
struct SeededInit {
  std::uint64_t seed = 0;
  float scale = 1.0f;
  bool operator==(const SeededInit&) const = default;
};

inline std::vector<float> generate_weights(const SeededInit& init, std::size_t count) {
  std::mt19937_64 engine(init.seed);
  std::vector<float> out(count);
  for (auto& w : out) {
    // top 24 bits -> [0, 1); std distributions are not portable across standard libraries
    const double u = static_cast<double>(engine() >> 40) * 0x1.0p-24;
    w = static_cast<float>(init.scale * (2.0 * u - 1.0));
  }
  return out;
}

struct OperatorSpec {
  OpKind kind = OpKind::ReLU;
  std::size_t kernel = 1;
  std::size_t dilation = 1;
  std::size_t stride = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  // Conv1D: [out][in][kernel]. Dense: [out][in * input_length], flattened channel-major.
  // Attention: Wq, Wk, Wv (in x in each) then Wo (out x in), all row-major.
  std::vector<float> weights;
  std::optional<std::vector<float>> bias;
  // When set, weights/bias are regenerated from the seed on every validation.
  std::optional<SeededInit> weight_init;
  std::optional<SeededInit> bias_init;
  // Add only: producer of the second operand.
  std::string add_source;

  bool operator==(const OperatorSpec&) const = default;
};

// Reserved producer id for the raw stream.
inline constexpr std::string_view kStreamInput = "input";

struct Node {
  std::string id;
  std::string input;
  OperatorSpec op;
  bool operator==(const Node&) const = default;
};

struct WindowConfig {
  std::size_t l = 1;
  std::size_t s = 1;

  double overlap_rate() const { return 1.0 - static_cast<double>(s) / static_cast<double>(l); }

  void validate() const {
    if (l < 1 || s < 1 || s > l) {
      throw ValidationError("window requires 1 <= s <= l (got l=" + std::to_string(l) + ", s=" + std::to_string(s) + ")");
    }
  }

  std::size_t window_count(std::size_t stream_length) const {
    return stream_length < l ? 0 : (stream_length - l) / s + 1;
  }

  bool operator==(const WindowConfig&) const = default;
};

// Position of a feature map on the window's time axis: column p ends at
// window sample offset + p * stride.
struct TimeAxis {
  std::size_t length = 0;
  std::size_t offset = 0;
  std::size_t stride = 1;
  bool operator==(const TimeAxis&) const = default;
};

// Samples one output column spans for a sliding operator; 1 for pointwise.
inline std::size_t kernel_extent(const OperatorSpec& op) {
  switch (op.kind) {
    case OpKind::Conv1D: return (op.kernel - 1) * op.dilation + 1;
    case OpKind::MaxPool:
    case OpKind::AvgPool: return op.kernel;
    default: return 1;
  }
}

inline std::size_t output_length(const OperatorSpec& op, std::size_t input_length) {
  if (is_global(op.kind)) return input_length >= 1 ? 1 : 0;
  if (is_pointwise(op.kind)) return input_length;
  const std::size_t tau = kernel_extent(op);
  return input_length < tau ? 0 : (input_length - tau) / op.stride + 1;
}

inline std::size_t expected_weight_count(const OperatorSpec& op, std::size_t input_length) {
  switch (op.kind) {
    case OpKind::Conv1D: return op.out_channels * op.in_channels * op.kernel;
    case OpKind::Dense: return op.out_channels * op.in_channels * input_length;
    case OpKind::Attention: return 3 * op.in_channels * op.in_channels + op.out_channels * op.in_channels;
    default: return 0;
  }
}

// Producer index convention: -1 is the stream, otherwise a node index.
inline constexpr int kStreamIndex = -1;

struct NodeShape {
  int input = kStreamIndex;
  int side = kStreamIndex;  // second operand, Add only
  std::size_t in_channels = 0;
  TimeAxis in;
  TimeAxis out;
};

// Validated, immutable chain of operators with optional Add side-edges.
class ModelGraph {
 public:
  static ModelGraph make(std::size_t input_channels, WindowConfig window, std::vector<Node> nodes) {
    ModelGraph g;
    g.input_channels_ = input_channels;
    g.window_ = window;
    g.nodes_ = std::move(nodes);
    g.validate();
    return g;
  }

  // Same model under a different window; seeded Dense weights are regenerated.
  ModelGraph with_window(WindowConfig window) const { return make(input_channels_, window, nodes_); }

  std::size_t input_channels() const noexcept { return input_channels_; }
  const WindowConfig& window() const noexcept { return window_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const Node& node(std::size_t i) const { return nodes_.at(i); }
  const std::vector<NodeShape>& shapes() const noexcept { return shapes_; }
  const NodeShape& shape(std::size_t i) const { return shapes_.at(i); }
  std::size_t size() const noexcept { return nodes_.size(); }

  std::optional<int> index_of(std::string_view id) const {
    if (id == kStreamInput) return kStreamIndex;
    if (auto it = index_.find(std::string(id)); it != index_.end()) return it->second;
    return std::nullopt;
  }

  std::size_t channels_of(int producer) const {
    return producer == kStreamIndex ? input_channels_ : nodes_[producer].op.out_channels;
  }

  TimeAxis axis_of(int producer) const {
    return producer == kStreamIndex ? TimeAxis{window_.l, 0, 1} : shapes_[producer].out;
  }

  const TimeAxis& output_axis() const { return shapes_.back().out; }
  std::size_t output_channels() const { return nodes_.back().op.out_channels; }

  bool operator==(const ModelGraph& o) const {
    return input_channels_ == o.input_channels_ && window_ == o.window_ && nodes_ == o.nodes_;
  }

 private:
  ModelGraph() = default;

  void validate();

  std::size_t input_channels_ = 1;
  WindowConfig window_;
  std::vector<Node> nodes_;
  std::vector<NodeShape> shapes_;
  std::unordered_map<std::string, int> index_;
};

namespace detail {

inline void check_positive(const Node& n, std::size_t v, const char* field) {
  if (v < 1) throw ValidationError(n.id, std::string(field) + " must be >= 1");
}

inline TimeAxis align_add(const Node& n, const TimeAxis& a, const TimeAxis& b) {
  if (a.stride != b.stride) {
    throw ValidationError(n.id, "Add operands have different cumulative strides (" + std::to_string(a.stride) +
                                    " vs " + std::to_string(b.stride) + ")");
  }
  const std::size_t hi = std::max(a.offset, b.offset);
  const std::size_t lo = std::min(a.offset, b.offset);
  if ((hi - lo) % a.stride != 0) {
    throw ValidationError(n.id, "Add operands are not time-aligned (offsets " + std::to_string(a.offset) + " and " +
                                    std::to_string(b.offset) + ", stride " + std::to_string(a.stride) + ")");
  }
  auto usable = [&](const TimeAxis& x) {
    const std::size_t skip = (hi - x.offset) / x.stride;
    return x.length > skip ? x.length - skip : 0;
  };
  return TimeAxis{std::min(usable(a), usable(b)), hi, a.stride};
}

}  // namespace detail

inline void ModelGraph::validate() {
  if (input_channels_ < 1) throw ValidationError("input_channels must be >= 1");
  window_.validate();
  if (nodes_.empty()) throw ValidationError("model has no nodes");

  index_.clear();
  shapes_.assign(nodes_.size(), NodeShape{});
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    OperatorSpec& op = n.op;
    NodeShape& sh = shapes_[i];

    if (n.id.empty()) throw ValidationError("node " + std::to_string(i) + " has an empty id");
    if (n.id == kStreamInput) throw ValidationError(n.id, "id is reserved for the stream input");
    if (index_.count(n.id)) throw ValidationError(n.id, "duplicate node id");

    const std::string expected_input = i == 0 ? std::string(kStreamInput) : nodes_[i - 1].id;
    if (n.input != expected_input) {
      throw ValidationError(n.id, "input must be the preceding node '" + expected_input + "' (got '" + n.input +
                                      "'); only chains with Add side-edges are supported");
    }
    sh.input = static_cast<int>(i) - 1;

    if (op.kind == OpKind::Add) {
      auto src = index_of(op.add_source);
      if (!src) {
        throw ValidationError(n.id, "Add source '" + op.add_source + "' is not an earlier node (topology error)");
      }
      sh.side = *src;
    } else if (!op.add_source.empty()) {
      throw ValidationError(n.id, "only Add nodes take a second operand");
    }

    detail::check_positive(n, op.kernel, "kernel");
    detail::check_positive(n, op.dilation, "dilation");
    detail::check_positive(n, op.stride, "stride");
    detail::check_positive(n, op.in_channels, "in_channels");
    detail::check_positive(n, op.out_channels, "out_channels");
    if (op.kind != OpKind::Conv1D && op.dilation != 1) throw ValidationError(n.id, "dilation applies to Conv1D only");
    if (!is_local(op.kind) && (op.kernel != 1 || op.stride != 1)) {
      throw ValidationError(n.id, "kernel/stride apply to Conv1D, MaxPool and AvgPool only");
    }

    const std::size_t in_ch = channels_of(sh.input);
    if (op.in_channels != in_ch) {
      throw ValidationError(n.id, "in_channels " + std::to_string(op.in_channels) + " does not match producer's " +
                                      std::to_string(in_ch) + " channels");
    }
    if (!has_weights(op.kind) && op.in_channels != op.out_channels) {
      throw ValidationError(n.id, std::string(to_string(op.kind)) + " must preserve the channel count");
    }
    if (op.kind == OpKind::Add && channels_of(sh.side) != in_ch) {
      throw ValidationError(n.id, "Add operands have different channel counts");
    }
    sh.in_channels = in_ch;
    sh.in = axis_of(sh.input);

    if (op.kind == OpKind::Add) {
      sh.out = detail::align_add(n, sh.in, axis_of(sh.side));
    } else if (is_pointwise(op.kind)) {
      sh.out = sh.in;
    } else if (is_global(op.kind)) {
      sh.out = TimeAxis{output_length(op, sh.in.length),
                        sh.in.offset + (sh.in.length > 0 ? sh.in.length - 1 : 0) * sh.in.stride,
                        sh.in.stride * std::max<std::size_t>(sh.in.length, 1)};
    } else {
      sh.out = TimeAxis{output_length(op, sh.in.length), sh.in.offset + (kernel_extent(op) - 1) * sh.in.stride,
                        sh.in.stride * op.stride};
    }
    if (sh.out.length == 0) {
      throw ValidationError(n.id, "produces no output for window length " + std::to_string(window_.l) +
                                      " (input length " + std::to_string(sh.in.length) + ")");
    }

    const std::size_t n_weights = expected_weight_count(op, sh.in.length);
    if (op.weight_init) op.weights = generate_weights(*op.weight_init, n_weights);
    if (op.weights.size() != n_weights) {
      throw ValidationError(n.id, "expected " + std::to_string(n_weights) + " weights, got " +
                                      std::to_string(op.weights.size()));
    }
    if (op.bias_init) op.bias = generate_weights(*op.bias_init, op.out_channels);
    if (op.bias) {
      if (!has_weights(op.kind)) throw ValidationError(n.id, "bias is not allowed for this operator");
      if (op.bias->size() != op.out_channels) {
        throw ValidationError(n.id, "expected " + std::to_string(op.out_channels) + " bias values, got " +
                                        std::to_string(op.bias->size()));
      }
    }
    index_.emplace(n.id, static_cast<int>(i));
  }
}

}  // namespace ssmstream
