#pragma once

#include <cstddef>
#include <cstdint>

#include <json.hpp>

namespace ssmstream {

// Accounting for one run over a stream. MAC counts are exact; the
// per-window streaming figure is a mean over the streaming steps.
struct RunMetrics {
  std::uint64_t preheat_macs = 0;
  double streaming_macs_per_window = 0.0;
  std::uint64_t vanilla_macs_per_window = 0;
  std::uint64_t preheat_compares = 0;
  double streaming_compares_per_window = 0.0;
  std::size_t persistent_state_bytes = 0;
  std::size_t gta_cache_bytes = 0;
  std::size_t transient_bytes = 0;
  std::size_t vanilla_peak_activation_bytes = 0;
  std::size_t outputs = 0;
  double redundancy_eliminated = 0.0;
  double ram_ratio = 0.0;

  // Filled from the fields above; never clamped.
  void finalize() {
    redundancy_eliminated =
        vanilla_macs_per_window == 0 ? 0.0
                                     : 1.0 - streaming_macs_per_window / static_cast<double>(vanilla_macs_per_window);
    ram_ratio = vanilla_peak_activation_bytes == 0
                    ? 0.0
                    : static_cast<double>(persistent_state_bytes + gta_cache_bytes) /
                          static_cast<double>(vanilla_peak_activation_bytes);
  }

  bool operator==(const RunMetrics&) const = default;
};

inline void to_json(nlohmann::json& j, const RunMetrics& m) {
  j = nlohmann::json{{"preheat_macs", m.preheat_macs},
                     {"streaming_macs_per_window", m.streaming_macs_per_window},
                     {"vanilla_macs_per_window", m.vanilla_macs_per_window},
                     {"preheat_compares", m.preheat_compares},
                     {"streaming_compares_per_window", m.streaming_compares_per_window},
                     {"persistent_state_bytes", m.persistent_state_bytes},
                     {"gta_cache_bytes", m.gta_cache_bytes},
                     {"transient_bytes", m.transient_bytes},
                     {"vanilla_peak_activation_bytes", m.vanilla_peak_activation_bytes},
                     {"outputs", m.outputs},
                     {"redundancy_eliminated", m.redundancy_eliminated},
                     {"ram_ratio", m.ram_ratio}};
}

inline void from_json(const nlohmann::json& j, RunMetrics& m) {
  j.at("preheat_macs").get_to(m.preheat_macs);
  j.at("streaming_macs_per_window").get_to(m.streaming_macs_per_window);
  j.at("vanilla_macs_per_window").get_to(m.vanilla_macs_per_window);
  j.at("preheat_compares").get_to(m.preheat_compares);
  j.at("streaming_compares_per_window").get_to(m.streaming_compares_per_window);
  j.at("persistent_state_bytes").get_to(m.persistent_state_bytes);
  j.at("gta_cache_bytes").get_to(m.gta_cache_bytes);
  j.at("transient_bytes").get_to(m.transient_bytes);
  j.at("vanilla_peak_activation_bytes").get_to(m.vanilla_peak_activation_bytes);
  j.at("outputs").get_to(m.outputs);
  j.at("redundancy_eliminated").get_to(m.redundancy_eliminated);
  j.at("ram_ratio").get_to(m.ram_ratio);
}

}  // namespace ssmstream
