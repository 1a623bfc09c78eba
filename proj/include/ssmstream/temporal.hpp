#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssmstream/errors.hpp"
#include "ssmstream/graph.hpp"

namespace ssmstream {

// Receptive field of an operator that spans its entire input.
inline constexpr std::size_t kGlobalField = std::numeric_limits<std::size_t>::max();

// Time steps of its own input that one output element depends on.
inline std::size_t receptive_field(const OperatorSpec& op) {
  if (is_global(op.kind)) return kGlobalField;
  return kernel_extent(op);
}

struct NodeTemporal {
  std::string id;
  OpKind kind = OpKind::ReLU;
  std::size_t tau = 1;          // resolved: GLOBAL becomes the actual input length
  std::size_t stride = 1;       // local emission stride
  bool is_gta = false;
  bool in_ssm_subgraph = true;
  std::size_t input_length = 0;
  std::size_t output_length = 0;
  std::size_t cumulative_stride = 1;  // window samples between consecutive output columns
  std::size_t end_to_end_field = 1;   // window samples one output column depends on
};

// Partition of a model at its first global temporal aggregator (GTA). Without
// a GTA the whole graph streams; the boundary fields then describe the model
// output, which is collected the same way the GTA input would be.
struct TemporalReport {
  std::vector<NodeTemporal> per_node;
  std::optional<std::size_t> gta_index;
  std::optional<std::string> gta_boundary;
  std::size_t cumulative_stride_at_gta = 1;
  std::size_t feature_length_at_gta = 0;
  std::size_t feature_channels_at_gta = 0;
  std::optional<std::size_t> gta_trigger_stride;

  // Number of leading nodes that run as streaming state-space stages.
  std::size_t ssm_node_count() const { return gta_index ? *gta_index : per_node.size(); }
};

namespace detail {

inline std::optional<std::size_t> trigger_for(const WindowConfig& w, std::size_t cumulative_stride) {
  if (w.s % cumulative_stride != 0) return std::nullopt;
  return w.s / cumulative_stride;
}

}  // namespace detail

inline TemporalReport analyze(const ModelGraph& g) {
  TemporalReport r;
  r.per_node.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Node& n = g.node(i);
    const NodeShape& sh = g.shape(i);
    NodeTemporal t;
    t.id = n.id;
    t.kind = n.op.kind;
    const std::size_t rf = receptive_field(n.op);
    t.tau = rf == kGlobalField ? sh.in.length : rf;
    t.stride = n.op.stride;
    t.is_gta = rf == kGlobalField;
    t.input_length = sh.in.length;
    t.output_length = sh.out.length;
    t.cumulative_stride = sh.out.stride;
    t.end_to_end_field = sh.out.offset + 1;
    if (t.is_gta && !r.gta_index) {
      r.gta_index = i;
      r.gta_boundary = n.id;
    }
    t.in_ssm_subgraph = !r.gta_index.has_value();
    r.per_node.push_back(std::move(t));
  }

  TimeAxis boundary;
  if (r.gta_index) {
    boundary = g.shape(*r.gta_index).in;
    r.feature_channels_at_gta = g.shape(*r.gta_index).in_channels;
  } else {
    boundary = g.output_axis();
    r.feature_channels_at_gta = g.output_channels();
  }
  r.cumulative_stride_at_gta = boundary.stride;
  r.feature_length_at_gta = boundary.length;
  r.gta_trigger_stride = detail::trigger_for(g.window(), boundary.stride);
  return r;
}

// New boundary columns produced per window step.
inline std::size_t compute_gta_trigger(const ModelGraph& g, const TemporalReport& report) {
  const std::size_t s = g.window().s;
  const std::size_t cs = report.cumulative_stride_at_gta;
  if (auto t = detail::trigger_for(g.window(), cs)) return *t;
  throw AlignmentError("window stride " + std::to_string(s) + " is not a multiple of the cumulative stride " +
                       std::to_string(cs) + (report.gta_boundary ? " before '" + *report.gta_boundary + "'" : "") +
                       "; the window stride must align with downsampling");
}

inline nlohmann::json to_json(const TemporalReport& r) {
  using nlohmann::json;
  json nodes = json::array();
  for (const auto& t : r.per_node) {
    nodes.push_back({{"id", t.id},
                     {"kind", std::string(to_string(t.kind))},
                     {"tau", t.tau},
                     {"stride", t.stride},
                     {"is_gta", t.is_gta},
                     {"subgraph", t.in_ssm_subgraph ? "ssm" : "gta"},
                     {"input_length", t.input_length},
                     {"output_length", t.output_length},
                     {"cumulative_stride", t.cumulative_stride},
                     {"end_to_end_field", t.end_to_end_field}});
  }
  return json{{"nodes", std::move(nodes)},
              {"gta_boundary", r.gta_boundary ? json(*r.gta_boundary) : json(nullptr)},
              {"cumulative_stride_at_gta", r.cumulative_stride_at_gta},
              {"feature_length_at_gta", r.feature_length_at_gta},
              {"feature_channels_at_gta", r.feature_channels_at_gta},
              {"gta_trigger_stride", r.gta_trigger_stride ? json(*r.gta_trigger_stride) : json(nullptr)}};
}

}  // namespace ssmstream
