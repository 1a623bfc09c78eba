#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssmstream/errors.hpp"
#include "ssmstream/graph.hpp"
#include "ssmstream/model_io.hpp"
#include "ssmstream/oracle.hpp"
#include "ssmstream/plan.hpp"
#include "ssmstream/run_metrics.hpp"
#include "ssmstream/runtime.hpp"
#include "ssmstream/stream_io.hpp"
#include "ssmstream/temporal.hpp"

namespace ssmstream {

namespace detail {

inline void check_same_shapes(const std::vector<TimeSeriesTensor>& a, const std::vector<TimeSeriesTensor>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("output counts differ: " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].channels() != b[i].channels() || a[i].length() != b[i].length()) {
      throw std::invalid_argument("output " + std::to_string(i) + " shapes differ");
    }
  }
}

}  // namespace detail

// rms(a - b) / rms(b) over every matched scalar; empty when b is all zero.
inline std::optional<double> relative_rmse(const std::vector<TimeSeriesTensor>& a,
                                           const std::vector<TimeSeriesTensor>& b) {
  detail::check_same_shapes(a, b);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = a[i].data(), y = b[i].data();
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double d = static_cast<double>(x[k]) - static_cast<double>(y[k]);
      num += d * d;
      den += static_cast<double>(y[k]) * static_cast<double>(y[k]);
    }
  }
  if (den == 0.0) return std::nullopt;
  return std::sqrt(num / den);
}

inline std::optional<double> relative_rmse(const TimeSeriesTensor& a, const TimeSeriesTensor& b) {
  return relative_rmse(std::vector<TimeSeriesTensor>{a}, std::vector<TimeSeriesTensor>{b});
}

// max |a - b| / max |b| for one output; an all-zero reference gives the
// absolute deviation instead.
inline double max_relative_deviation(const TimeSeriesTensor& a, const TimeSeriesTensor& ref) {
  if (a.channels() != ref.channels() || a.length() != ref.length()) {
    throw std::invalid_argument("output shapes differ");
  }
  double diff = 0.0, norm = 0.0;
  const auto x = a.data(), y = ref.data();
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = std::abs(static_cast<double>(x[k]) - static_cast<double>(y[k]));
    diff = std::isnan(d) ? std::numeric_limits<double>::infinity() : std::max(diff, d);
    norm = std::max(norm, std::abs(static_cast<double>(y[k])));
  }
  return norm == 0.0 ? diff : diff / norm;
}

// Worst per-window deviation across a run.
inline double max_relative_deviation(const std::vector<TimeSeriesTensor>& a, const std::vector<TimeSeriesTensor>& ref) {
  detail::check_same_shapes(a, ref);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, max_relative_deviation(a[i], ref[i]));
  return worst;
}

struct VanillaStreamResult {
  std::vector<TimeSeriesTensor> outputs;
  RunMetrics metrics;
};

// Vanilla baseline over a stream: every window recomputed from scratch.
inline VanillaStreamResult run_vanilla(const ModelGraph& g, const TimeSeriesTensor& stream) {
  WindowSlicer slicer(g.window(), stream);
  VanillaStreamResult r;
  OpCounts first;
  for (std::size_t k = 1; k <= slicer.count(); ++k) {
    OpCounts n;
    auto acts = vanilla_activations(g, slicer.window(k), &n);
    if (k == 1) first = n;
    r.outputs.push_back(std::move(acts.back()));
  }
  RunMetrics& m = r.metrics;
  m.preheat_macs = first.macs;
  m.preheat_compares = first.compares;
  m.streaming_macs_per_window = static_cast<double>(first.macs);
  m.streaming_compares_per_window = static_cast<double>(first.compares);
  m.vanilla_macs_per_window = first.macs;
  m.vanilla_peak_activation_bytes = vanilla_peak_activation_bytes(g);
  m.transient_bytes = m.vanilla_peak_activation_bytes;
  m.outputs = r.outputs.size();
  m.finalize();
  // Vanilla holds its whole activation set; report it against itself.
  m.ram_ratio = 1.0;
  return r;
}

inline StreamingPlan build_plan(const ModelGraph& g, Precision precision,
                                std::optional<std::size_t> pool_chunk = std::nullopt) {
  return transform(g, analyze(g), precision, pool_chunk);
}

struct ComparisonReport {
  std::string model;
  WindowConfig window;
  RunMetrics vanilla;
  RunMetrics streaming;
  std::optional<RunMetrics> streaming_bf16;
  double max_rel_dev = 0.0;
  std::optional<double> bf16_rmse;

  bool operator==(const ComparisonReport&) const = default;
};

inline void to_json(nlohmann::json& j, const ComparisonReport& r) {
  j = nlohmann::json{{"model", r.model},
                     {"window", {{"l", r.window.l}, {"s", r.window.s}, {"overlap_rate", r.window.overlap_rate()}}},
                     {"vanilla", r.vanilla},
                     {"streaming", r.streaming},
                     {"max_rel_dev", r.max_rel_dev},
                     {"bf16_rmse", r.bf16_rmse ? nlohmann::json(*r.bf16_rmse) : nlohmann::json(nullptr)}};
  if (r.streaming_bf16) j["streaming_bf16"] = *r.streaming_bf16;
}

inline void from_json(const nlohmann::json& j, ComparisonReport& r) {
  j.at("model").get_to(r.model);
  j.at("window").at("l").get_to(r.window.l);
  j.at("window").at("s").get_to(r.window.s);
  j.at("vanilla").get_to(r.vanilla);
  j.at("streaming").get_to(r.streaming);
  if (j.contains("streaming_bf16")) {
    r.streaming_bf16 = j.at("streaming_bf16").get<RunMetrics>();
  } else {
    r.streaming_bf16.reset();
  }
  j.at("max_rel_dev").get_to(r.max_rel_dev);
  const auto& e = j.at("bf16_rmse");
  r.bf16_rmse = e.is_null() ? std::nullopt : std::optional<double>(e.get<double>());
}

struct CompareOptions {
  std::optional<std::size_t> l;
  std::optional<std::size_t> s;
  bool bf16 = false;
  std::optional<std::size_t> pool_chunk;
};

inline ModelGraph apply_overrides(const ModelGraph& g, std::optional<std::size_t> l, std::optional<std::size_t> s) {
  if (!l && !s) return g;
  return g.with_window({l.value_or(g.window().l), s.value_or(g.window().s)});
}

// Vanilla vs streaming (and optionally BF16 streaming) over one stream.
inline ComparisonReport compare(const ModelGraph& model, const TimeSeriesTensor& stream, const CompareOptions& opt = {},
                                std::string name = "") {
  const ModelGraph g = apply_overrides(model, opt.l, opt.s);
  ComparisonReport rep;
  rep.model = std::move(name);
  rep.window = g.window();
  const VanillaStreamResult van = run_vanilla(g, stream);
  const StreamResult fp32 = run_stream(build_plan(g, Precision::FP32, opt.pool_chunk), stream, g.window());
  rep.vanilla = van.metrics;
  rep.streaming = fp32.metrics;
  rep.max_rel_dev = max_relative_deviation(fp32.outputs, van.outputs);
  if (opt.bf16) {
    const StreamResult b16 = run_stream(build_plan(g, Precision::BF16, opt.pool_chunk), stream, g.window());
    rep.streaming_bf16 = b16.metrics;
    rep.bf16_rmse = relative_rmse(b16.outputs, fp32.outputs);
  }
  return rep;
}

inline ComparisonReport compare(const std::filesystem::path& model_path, const std::filesystem::path& stream_path,
                                const CompareOptions& opt = {}) {
  const ModelGraph g = load_model(model_path);
  return compare(g, read_stream(stream_path, g.input_channels()), opt, model_path.string());
}

struct SweepRow {
  double overlap_rate = 0.0;
  std::size_t s = 0;
  double normalized_macs = 0.0;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::vector<std::string> warnings;

  // Header `overlap_rate,normalized_macs`; skipped rates follow as comment lines.
  std::string to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "overlap_rate,normalized_macs\n";
    for (const auto& r : rows) out << r.overlap_rate << ',' << r.normalized_macs << '\n';
    for (const auto& w : warnings) out << "# warning: " << w << '\n';
    return out.str();
  }
};

// Streaming MACs per window step divided by preheat MACs, per overlap rate.
inline SweepTable sweep_overlap(const ModelGraph& model, const TimeSeriesTensor& stream, const std::vector<double>& rates) {
  SweepTable table;
  const std::size_t l = model.window().l;
  for (double r : rates) {
    const double exact = (1.0 - r) * static_cast<double>(l);
    const double rounded = std::round(exact);
    std::ostringstream tag;
    tag << "rate " << r;
    if (!(r >= 0.0 && r < 1.0) || std::abs(exact - rounded) > 1e-9 * std::max(1.0, exact) || rounded < 1.0) {
      table.warnings.push_back(tag.str() + ": window stride (1-r)*l = " + std::to_string(exact) +
                               " is not a positive integer");
      continue;
    }
    const auto s = static_cast<std::size_t>(rounded);
    try {
      const ModelGraph g = model.with_window({l, s});
      if (stream.length() < l + s) {
        table.warnings.push_back(tag.str() + ": stream too short for one streaming step at s=" + std::to_string(s));
        continue;
      }
      const StreamResult res = run_stream(build_plan(g, Precision::FP32), stream, g.window());
      table.rows.push_back({r, s, res.metrics.streaming_macs_per_window / static_cast<double>(res.metrics.preheat_macs)});
    } catch (const AlignmentError& e) {
      table.warnings.push_back(tag.str() + ": " + e.what());
    } catch (const ValidationError& e) {
      table.warnings.push_back(tag.str() + ": " + e.what());
    }
  }
  return table;
}

inline SweepTable sweep_overlap(const std::filesystem::path& model_path, const std::filesystem::path& stream_path,
                                const std::vector<double>& rates, std::optional<std::size_t> l = std::nullopt) {
  const ModelGraph g = apply_overrides(load_model(model_path), l, std::nullopt);
  return sweep_overlap(g, read_stream(stream_path, g.input_channels()), rates);
}

}  // namespace ssmstream
