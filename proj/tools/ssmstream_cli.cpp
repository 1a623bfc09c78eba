// Command-line front end: analyze, transform, run, compare, sweep.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ssmstream.hpp"

namespace fs = std::filesystem;
using namespace ssmstream;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kInvalid = 2, kMisaligned = 3 };

struct WindowOverrides {
  std::optional<std::size_t> l;
  std::optional<std::size_t> s;

  void attach(CLI::App* cmd) {
    cmd->add_option("--l", l, "Override the window length")->check(CLI::PositiveNumber);
    cmd->add_option("--s", s, "Override the window stride")->check(CLI::PositiveNumber);
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

ModelGraph load(const std::string& path, const WindowOverrides& w) { return apply_overrides(load_model(path), w.l, w.s); }

std::vector<double> parse_rates(const std::string& text) {
  std::vector<double> rates;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, end - pos);
    try {
      std::size_t used = 0;
      rates.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ParseError("bad overlap rate '" + item + "'");
    }
    pos = end + 1;
  }
  return rates;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming inference for 1-D temporal networks"};
  app.require_subcommand(1);

  std::string model_path, stream_path, out_path, report_path, mode = "streaming", rates_text;
  bool bf16 = false;
  std::optional<std::size_t> pool_chunk;
  WindowOverrides win;

  auto* analyze_cmd = app.add_subcommand("analyze", "Receptive fields, strides and the GTA boundary as JSON");
  analyze_cmd->add_option("model", model_path, "Model description (JSON)")->required();
  win.attach(analyze_cmd);

  auto* transform_cmd = app.add_subcommand("transform", "Compile to a streaming plan and print its summary");
  transform_cmd->add_option("model", model_path)->required();
  transform_cmd->add_flag("--bf16", bf16, "Store hidden states as bfloat16");
  transform_cmd->add_option("--pool-chunk", pool_chunk, "Chunk size for two-stage global pooling")
      ->check(CLI::PositiveNumber);
  win.attach(transform_cmd);

  auto* run_cmd = app.add_subcommand("run", "Run a model over a stream file");
  run_cmd->add_option("model", model_path)->required();
  run_cmd->add_option("stream", stream_path, "Stream input (.f32 or .csv)")->required();
  run_cmd->add_option("--mode", mode)->check(CLI::IsMember({"vanilla", "streaming"}));
  run_cmd->add_flag("--bf16", bf16);
  run_cmd->add_option("--pool-chunk", pool_chunk)->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", out_path, "Output file (.f32 or .csv); metrics go to <out>.metrics.json");
  win.attach(run_cmd);

  auto* compare_cmd = app.add_subcommand("compare", "Vanilla vs streaming accounting report");
  compare_cmd->add_option("model", model_path)->required();
  compare_cmd->add_option("stream", stream_path)->required();
  compare_cmd->add_flag("--bf16", bf16, "Also run a bfloat16 plan and report its relative RMSE");
  compare_cmd->add_option("--pool-chunk", pool_chunk)->check(CLI::PositiveNumber);
  compare_cmd->add_option("--report", report_path, "Write the JSON report here as well");
  win.attach(compare_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "Normalized streaming MACs across overlap rates (CSV)");
  sweep_cmd->add_option("model", model_path)->required();
  sweep_cmd->add_option("stream", stream_path)->required();
  sweep_cmd->add_option("--rates", rates_text, "Comma-separated overlap rates")->required();
  sweep_cmd->add_option("--out", out_path, "Write the CSV here instead of stdout");
  sweep_cmd->add_option("--l", win.l, "Override the window length")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  const Precision precision = bf16 ? Precision::BF16 : Precision::FP32;
  try {
    if (*analyze_cmd) {
      std::cout << to_json(analyze(load(model_path, win))).dump(2) << '\n';
    } else if (*transform_cmd) {
      const ModelGraph g = load(model_path, win);
      std::cout << plan_summary(build_plan(g, precision, pool_chunk)).dump(2) << '\n';
    } else if (*run_cmd) {
      const ModelGraph g = load(model_path, win);
      const TimeSeriesTensor stream = read_stream(stream_path, g.input_channels());
      std::vector<TimeSeriesTensor> outputs;
      RunMetrics metrics;
      if (mode == "vanilla") {
        auto r = run_vanilla(g, stream);
        outputs = std::move(r.outputs);
        metrics = r.metrics;
      } else {
        auto r = run_stream(build_plan(g, precision, pool_chunk), stream, g.window());
        outputs = std::move(r.outputs);
        metrics = r.metrics;
      }
      const std::string metrics_text = nlohmann::json(metrics).dump(2) + "\n";
      if (!out_path.empty()) {
        write_outputs(out_path, outputs);
        write_text(out_path + ".metrics.json", metrics_text);
      }
      std::cout << metrics_text;
    } else if (*compare_cmd) {
      CompareOptions opt;
      opt.l = win.l;
      opt.s = win.s;
      opt.bf16 = bf16;
      opt.pool_chunk = pool_chunk;
      const std::string text = nlohmann::json(compare(model_path, stream_path, opt)).dump(2) + "\n";
      if (!report_path.empty()) write_text(report_path, text);
      std::cout << text;
    } else if (*sweep_cmd) {
      const SweepTable table = sweep_overlap(model_path, stream_path, parse_rates(rates_text), win.l);
      for (const auto& w : table.warnings) std::cerr << "warning: " << w << '\n';
      if (out_path.empty()) {
        std::cout << table.to_csv();
      } else {
        write_text(out_path, table.to_csv());
      }
    }
  } catch (const AlignmentError& e) {
    std::cerr << "alignment error: " << e.what() << '\n';
    return kMisaligned;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kInvalid;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
