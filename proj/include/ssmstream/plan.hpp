#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <numeric>
#include <optional>
#include <vector>

#include <json.hpp>

#include "ssmstream/errors.hpp"
#include "ssmstream/graph.hpp"
#include "ssmstream/kernels.hpp"
#include "ssmstream/ssm.hpp"
#include "ssmstream/temporal.hpp"

namespace ssmstream {

enum class StageKind { Ssm, ReLU, Add };

// One node of the streaming cascade. `out` holds the column produced on the
// current tick when `fired` is set.
struct CascadeStage {
  StageKind kind = StageKind::ReLU;
  std::size_t node = 0;
  int input = kStreamIndex;
  int side = kStreamIndex;
  std::size_t channels = 0;
  std::optional<SsmNode> ssm;
  // Add: columns the earlier-aligned operand emits before the other starts.
  // Both operands then fire on the same ticks, so no delay storage is needed.
  std::size_t lead_columns = 0;
  std::vector<float> out;
  bool fired = false;

  std::size_t state_bytes() const { return ssm ? ssm->state_bytes() : 0; }
};

// Producer id for the boundary cache inside the GTA-subgraph.
inline constexpr int kCacheIndex = -2;

// A node recomputed wholesale whenever the trigger fires.
struct GtaStep {
  std::size_t node = 0;
  int input = kCacheIndex;
  int side = kCacheIndex;
  std::size_t tau = 1;
  std::vector<float> act;  // out.length columns, time-major
};

enum class BoundaryKind { Cache, TwoStagePool, OutputCollector };

inline std::string_view to_string(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::Cache: return "gta_cache";
    case BoundaryKind::TwoStagePool: return "two_stage_pool";
    case BoundaryKind::OutputCollector: return "output_collector";
  }
  return "?";
}

// Compiled streaming form of a model. Owns all mutable buffers; one plan
// serves one stream.
struct StreamingPlan {
  std::shared_ptr<const ModelGraph> graph;
  Precision precision = Precision::FP32;
  std::vector<CascadeStage> cascade;
  std::optional<std::size_t> gta_index;
  int boundary_producer = kStreamIndex;
  BoundaryKind boundary = BoundaryKind::OutputCollector;
  std::optional<ColumnRing> gta_cache;
  std::optional<TwoStageGlobalPool> pool;
  std::size_t trigger = 1;
  std::size_t feature_length = 0;
  std::size_t feature_channels = 0;
  std::vector<GtaStep> gta_subgraph;
  std::vector<float> scratch;

  std::size_t persistent_state_bytes() const {
    std::size_t total = 0;
    for (const auto& st : cascade) total += st.state_bytes();
    return total;
  }

  std::size_t cache_bytes() const {
    if (pool) return pool->state_bytes();
    return gta_cache ? gta_cache->bytes() : 0;
  }

  std::size_t cache_columns() const {
    if (pool) return pool->state_columns();
    return gta_cache ? gta_cache->capacity() : 0;
  }

  // Largest FP32 column produced by a cascade stage.
  std::size_t largest_column_bytes() const {
    std::size_t m = graph->input_channels();
    for (const auto& st : cascade) m = std::max(m, st.channels);
    return m * sizeof(float);
  }

  // Peak of live GTA-subgraph activations (cache excluded) plus kernel scratch.
  std::size_t gta_working_bytes() const {
    const std::size_t n = gta_subgraph.size();
    std::vector<std::size_t> last_use(n);
    for (std::size_t k = 0; k < n; ++k) {
      last_use[k] = k;
      for (int p : {gta_subgraph[k].input, gta_subgraph[k].side}) {
        if (p >= 0 && gta_index && static_cast<std::size_t>(p) >= *gta_index) {
          auto& lu = last_use[static_cast<std::size_t>(p) - *gta_index];
          lu = std::max(lu, k);
        }
      }
    }
    if (n) last_use[n - 1] = n;
    std::size_t peak = 0;
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t live = 0;
      for (std::size_t j = 0; j <= k; ++j) {
        if (last_use[j] >= k) live += gta_subgraph[j].act.size() * sizeof(float);
      }
      peak = std::max(peak, live);
    }
    return peak + scratch.size() * sizeof(float);
  }

  std::size_t transient_bytes() const { return std::max(largest_column_bytes(), gta_working_bytes()); }
};

// Total persistent state: cascade hidden states plus boundary storage.
inline std::size_t state_bytes(const StreamingPlan& plan) { return plan.persistent_state_bytes() + plan.cache_bytes(); }

namespace detail {

inline bool references(const ModelGraph& g, std::size_t from, std::size_t to_excl, int producer) {
  for (std::size_t i = from; i < to_excl; ++i) {
    const auto& sh = g.shape(i);
    if (sh.input == producer || (g.node(i).op.kind == OpKind::Add && sh.side == producer)) return true;
  }
  return false;
}

}  // namespace detail

inline StreamingPlan transform(const ModelGraph& g, const TemporalReport& report, Precision precision,
                               std::optional<std::size_t> pool_chunk = std::nullopt) {
  StreamingPlan plan;
  plan.graph = std::make_shared<const ModelGraph>(g);
  const ModelGraph& graph = *plan.graph;
  plan.precision = precision;
  plan.gta_index = report.gta_index;
  plan.trigger = compute_gta_trigger(graph, report);
  plan.feature_length = report.feature_length_at_gta;
  plan.feature_channels = report.feature_channels_at_gta;

  std::size_t scratch = 0;
  const std::size_t n_ssm = report.ssm_node_count();
  plan.cascade.reserve(n_ssm);
  for (std::size_t i = 0; i < n_ssm; ++i) {
    const Node& n = graph.node(i);
    const NodeShape& sh = graph.shape(i);
    CascadeStage st;
    st.node = i;
    st.input = sh.input;
    st.channels = n.op.out_channels;
    st.out.assign(st.channels, 0.0f);
    switch (n.op.kind) {
      case OpKind::Conv1D:
      case OpKind::MaxPool:
      case OpKind::AvgPool: {
        const std::size_t tau = receptive_field(n.op);
        st.kind = StageKind::Ssm;
        st.ssm.emplace(n.op, tau, n.op.stride, precision);
        scratch = std::max(scratch, column_scratch_size(n.op, tau));
        break;
      }
      case OpKind::ReLU: st.kind = StageKind::ReLU; break;
      case OpKind::Add: {
        st.kind = StageKind::Add;
        st.side = sh.side;
        const TimeAxis a = graph.axis_of(sh.input), b = graph.axis_of(sh.side);
        st.lead_columns = (std::max(a.offset, b.offset) - std::min(a.offset, b.offset)) / a.stride;
        break;
      }
      default:
        throw ValidationError(n.id, "global operator inside the streaming subgraph");
    }
    plan.cascade.push_back(std::move(st));
  }

  if (!report.gta_index) {
    plan.boundary = BoundaryKind::OutputCollector;
    plan.boundary_producer = static_cast<int>(graph.size()) - 1;
    plan.gta_cache.emplace(plan.feature_length, plan.feature_channels, precision);
    plan.scratch.assign(scratch, 0.0f);
    return plan;
  }

  const std::size_t gta = *report.gta_index;
  const Node& boundary = graph.node(gta);
  plan.boundary_producer = graph.shape(gta).input;

  for (std::size_t i = gta; i < graph.size(); ++i) {
    const NodeShape& sh = graph.shape(i);
    for (int p : {sh.input, graph.node(i).op.kind == OpKind::Add ? sh.side : sh.input}) {
      if (p < static_cast<int>(gta) && p != plan.boundary_producer) {
        throw ValidationError(graph.node(i).id, "reads a streaming-subgraph node other than the GTA input");
      }
    }
  }

  const bool is_pool = boundary.op.kind == OpKind::GlobalAvgPool || boundary.op.kind == OpKind::GlobalMaxPool;
  const bool cache_needed_downstream = detail::references(graph, gta + 1, graph.size(), plan.boundary_producer);
  std::optional<std::size_t> chunk;
  if (pool_chunk) {
    if (!is_pool) throw ValidationError(boundary.id, "pool chunk given but the GTA is not a global pool");
    if (*pool_chunk == 0 || plan.feature_length % *pool_chunk != 0 || plan.trigger % *pool_chunk != 0) {
      throw ValidationError(boundary.id, "pool chunk " + std::to_string(*pool_chunk) +
                                             " must divide the feature length " + std::to_string(plan.feature_length) +
                                             " and the per-window column count " + std::to_string(plan.trigger));
    }
    if (cache_needed_downstream) {
      throw ValidationError(boundary.id, "two-stage pooling needs the GTA input to have no other reader");
    }
    chunk = *pool_chunk;
  } else if (is_pool && !cache_needed_downstream) {
    const std::size_t c = std::gcd(plan.feature_length, plan.trigger);
    if (c > 1 && 1 + plan.feature_length / c < plan.feature_length) chunk = c;
  }

  if (chunk) {
    plan.boundary = BoundaryKind::TwoStagePool;
    plan.pool.emplace(boundary.op.kind, plan.feature_length, *chunk, plan.feature_channels, precision);
  } else {
    plan.boundary = BoundaryKind::Cache;
    plan.gta_cache.emplace(plan.feature_length, plan.feature_channels, precision);
  }

  for (std::size_t i = gta; i < graph.size(); ++i) {
    const Node& n = graph.node(i);
    const NodeShape& sh = graph.shape(i);
    GtaStep step;
    step.node = i;
    step.input = sh.input == plan.boundary_producer ? kCacheIndex : sh.input;
    step.side = n.op.kind == OpKind::Add ? (sh.side == plan.boundary_producer ? kCacheIndex : sh.side) : step.input;
    const std::size_t rf = receptive_field(n.op);
    step.tau = rf == kGlobalField ? sh.in.length : rf;
    step.act.assign(sh.out.length * n.op.out_channels, 0.0f);
    scratch = std::max(scratch, column_scratch_size(n.op, step.tau));
    plan.gta_subgraph.push_back(std::move(step));
  }
  plan.scratch.assign(scratch, 0.0f);
  return plan;
}

inline nlohmann::json plan_summary(const StreamingPlan& plan) {
  using nlohmann::json;
  const ModelGraph& g = *plan.graph;
  json cascade = json::array();
  for (const auto& st : plan.cascade) {
    json j{{"id", g.node(st.node).id},
           {"kind", std::string(to_string(g.node(st.node).op.kind))},
           {"channels", st.channels},
           {"state_bytes", st.state_bytes()}};
    if (st.ssm) {
      j["stage"] = "ssm";
      j["tau"] = st.ssm->tau();
      j["stride"] = st.ssm->stride();
      j["state_channels"] = st.ssm->channels();
    } else {
      j["stage"] = "pointwise";
      j["tau"] = 1;
    }
    if (st.kind == StageKind::Add) j["lead_columns"] = st.lead_columns;
    cascade.push_back(std::move(j));
  }
  json gta = json::array();
  for (const auto& step : plan.gta_subgraph) gta.push_back(g.node(step.node).id);
  json boundary{{"kind", std::string(to_string(plan.boundary))},
                {"feature_length", plan.feature_length},
                {"channels", plan.feature_channels},
                {"state_columns", plan.cache_columns()},
                {"bytes", plan.cache_bytes()}};
  if (plan.pool) boundary["chunk_size"] = plan.pool->chunk_size();
  return json{{"precision", std::string(to_string(plan.precision))},
              {"gta_boundary", plan.gta_index ? json(g.node(*plan.gta_index).id) : json(nullptr)},
              {"trigger", plan.trigger},
              {"cascade", std::move(cascade)},
              {"boundary", std::move(boundary)},
              {"gta_subgraph", std::move(gta)},
              {"persistent_state_bytes", plan.persistent_state_bytes()},
              {"cache_bytes", plan.cache_bytes()},
              {"state_bytes", state_bytes(plan)},
              {"transient_bytes", plan.transient_bytes()}};
}

}  // namespace ssmstream
