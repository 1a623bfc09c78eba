#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ssmstream/errors.hpp"
#include "ssmstream/graph.hpp"

namespace ssmstream {

namespace detail {

using nlohmann::json;

inline void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& node,
                                const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) {
      if (node.empty()) throw ValidationError("unknown key '" + key + "' in " + where);
      throw ValidationError(node, "unknown key '" + key + "'");
    }
  }
}

inline std::size_t read_count(const json& obj, const char* key, const std::string& node) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    if (node.empty()) throw ValidationError(std::string("missing '") + key + "'");
    throw ValidationError(node, std::string("missing '") + key + "'");
  }
  if (!it->is_number_integer() || (it->is_number_integer() && it->get<long long>() < 0)) {
    if (node.empty()) throw ValidationError(std::string("'") + key + "' must be a non-negative integer");
    throw ValidationError(node, std::string("'") + key + "' must be a non-negative integer");
  }
  return it->get<std::size_t>();
}

inline void read_values(const json& j, const std::string& node, const char* key, std::vector<float>& values,
                        std::optional<SeededInit>& init) {
  if (j.is_array()) {
    values.clear();
    values.reserve(j.size());
    for (const auto& v : j) {
      if (!v.is_number()) throw ValidationError(node, std::string("'") + key + "' must contain only numbers");
      values.push_back(v.get<float>());
    }
    return;
  }
  if (j.is_object()) {
    reject_unknown_keys(j, {"seed", "scale"}, node, key);
    if (!j.contains("seed") || !j["seed"].is_number_unsigned() || !j.contains("scale") || !j["scale"].is_number()) {
      throw ValidationError(node, std::string("'") + key + "' generator needs unsigned 'seed' and numeric 'scale'");
    }
    init = SeededInit{j["seed"].get<std::uint64_t>(), j["scale"].get<float>()};
    return;
  }
  throw ValidationError(node, std::string("'") + key + "' must be an array or {seed, scale}");
}

inline Node parse_node(const json& j, std::size_t position) {
  if (!j.is_object()) throw ValidationError("node " + std::to_string(position) + " is not an object");
  if (!j.contains("id") || !j["id"].is_string()) {
    throw ValidationError("node " + std::to_string(position) + " needs a string 'id'");
  }
  Node n;
  n.id = j["id"].get<std::string>();
  if (!j.contains("kind") || !j["kind"].is_string()) throw ValidationError(n.id, "missing string 'kind'");
  const auto kind = parse_op_kind(j["kind"].get<std::string>());
  if (!kind) throw ValidationError(n.id, "unknown kind '" + j["kind"].get<std::string>() + "'");
  OperatorSpec& op = n.op;
  op.kind = *kind;

  switch (op.kind) {
    case OpKind::Conv1D:
      reject_unknown_keys(j, {"id", "input", "kind", "kernel", "dilation", "stride", "in_channels", "out_channels",
                              "weights", "bias"},
                          n.id, "node");
      break;
    case OpKind::MaxPool:
    case OpKind::AvgPool:
      reject_unknown_keys(j, {"id", "input", "kind", "kernel", "stride", "in_channels", "out_channels"}, n.id, "node");
      break;
    case OpKind::Dense:
    case OpKind::Attention:
      reject_unknown_keys(j, {"id", "input", "kind", "in_channels", "out_channels", "weights", "bias"}, n.id, "node");
      break;
    default:
      reject_unknown_keys(j, {"id", "input", "kind", "in_channels", "out_channels"}, n.id, "node");
  }

  const auto& input = j.contains("input") ? j["input"] : json();
  if (op.kind == OpKind::Add) {
    if (!input.is_array() || input.size() != 2 || !input[0].is_string() || !input[1].is_string()) {
      throw ValidationError(n.id, "Add needs \"input\": [primary, source]");
    }
    n.input = input[0].get<std::string>();
    op.add_source = input[1].get<std::string>();
  } else {
    if (!input.is_string()) throw ValidationError(n.id, "\"input\" must be a single producer id");
    n.input = input.get<std::string>();
  }

  if (is_local(op.kind)) op.kernel = read_count(j, "kernel", n.id);
  if (j.contains("dilation")) op.dilation = read_count(j, "dilation", n.id);
  if (j.contains("stride")) op.stride = read_count(j, "stride", n.id);
  op.in_channels = read_count(j, "in_channels", n.id);
  op.out_channels = read_count(j, "out_channels", n.id);

  if (has_weights(op.kind)) {
    if (!j.contains("weights")) throw ValidationError(n.id, "missing 'weights'");
    read_values(j["weights"], n.id, "weights", op.weights, op.weight_init);
    if (j.contains("bias")) {
      std::vector<float> bias;
      read_values(j["bias"], n.id, "bias", bias, op.bias_init);
      if (!op.bias_init) op.bias = std::move(bias);
    }
  }
  return n;
}

inline json values_to_json(const std::vector<float>& values, const std::optional<SeededInit>& init) {
  if (init) return json{{"seed", init->seed}, {"scale", init->scale}};
  json arr = json::array();
  for (float v : values) arr.push_back(v);
  return arr;
}

}  // namespace detail

inline ModelGraph parse_model(const nlohmann::json& j) {
  using detail::json;
  if (!j.is_object()) throw ValidationError("model description must be a JSON object");
  detail::reject_unknown_keys(j, {"input_channels", "window", "nodes"}, "", "model");
  const std::size_t channels = detail::read_count(j, "input_channels", "");
  if (!j.contains("window") || !j["window"].is_object()) throw ValidationError("missing 'window' object");
  detail::reject_unknown_keys(j["window"], {"l", "s"}, "", "window");
  WindowConfig window{detail::read_count(j["window"], "l", ""), detail::read_count(j["window"], "s", "")};
  if (!j.contains("nodes") || !j["nodes"].is_array()) throw ValidationError("missing 'nodes' array");
  std::vector<Node> nodes;
  for (std::size_t i = 0; i < j["nodes"].size(); ++i) nodes.push_back(detail::parse_node(j["nodes"][i], i));
  return ModelGraph::make(channels, window, std::move(nodes));
}

inline ModelGraph parse_model_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model description is not valid JSON: ") + e.what());
  }
  return parse_model(j);
}

inline ModelGraph load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model_text(ss.str());
}

inline nlohmann::json to_json(const ModelGraph& g) {
  using detail::json;
  json nodes = json::array();
  for (const Node& n : g.nodes()) {
    const OperatorSpec& op = n.op;
    json jn;
    jn["id"] = n.id;
    jn["kind"] = std::string(to_string(op.kind));
    if (op.kind == OpKind::Add) {
      jn["input"] = json::array({n.input, op.add_source});
    } else {
      jn["input"] = n.input;
    }
    if (is_local(op.kind)) {
      jn["kernel"] = op.kernel;
      jn["stride"] = op.stride;
    }
    if (op.kind == OpKind::Conv1D) jn["dilation"] = op.dilation;
    jn["in_channels"] = op.in_channels;
    jn["out_channels"] = op.out_channels;
    if (has_weights(op.kind)) {
      jn["weights"] = detail::values_to_json(op.weights, op.weight_init);
      if (op.bias) jn["bias"] = detail::values_to_json(*op.bias, op.bias_init);
    }
    nodes.push_back(std::move(jn));
  }
  return json{{"input_channels", g.input_channels()},
              {"window", {{"l", g.window().l}, {"s", g.window().s}}},
              {"nodes", std::move(nodes)}};
}

inline void save_model(const ModelGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file " + path.string());
  out << to_json(g).dump(2) << '\n';
}

}  // namespace ssmstream
