#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ssmstream/errors.hpp"
#include "ssmstream/tensor.hpp"

namespace ssmstream {

enum class StreamFormat { F32, CSV };

inline StreamFormat format_for(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".f32") return StreamFormat::F32;
  if (ext == ".csv") return StreamFormat::CSV;
  throw std::invalid_argument("unsupported stream extension '" + ext + "' (expected .f32 or .csv)");
}

namespace detail {

inline std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
  return v;
}

inline std::vector<float> parse_csv_row(std::string_view line, std::size_t line_no) {
  std::vector<float> row;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t end = line.find(',', pos);
    if (end == std::string_view::npos) end = line.size();
    std::string_view field = line.substr(pos, end - pos);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
      field.remove_suffix(1);
    }
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    float v = 0.0f;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": '" + std::string(field) + "' is not a number");
    }
    row.push_back(v);
    pos = end + 1;
  }
  return row;
}

inline std::string format_float(float v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

// Raw little-endian binary32, channels interleaved per time step.
inline std::vector<float> read_f32(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 4 != 0) throw ParseError(path.string() + ": size is not a multiple of 4 bytes");
  std::vector<float> values(bytes.size() / 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t u;
    std::memcpy(&u, bytes.data() + 4 * i, 4);
    values[i] = std::bit_cast<float>(detail::to_little_endian(u));
  }
  return values;
}

inline void write_f32(const std::filesystem::path& path, std::span<const float> values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (float v : values) {
    const std::uint32_t u = detail::to_little_endian(std::bit_cast<std::uint32_t>(v));
    out.write(reinterpret_cast<const char*>(&u), 4);
  }
}

// One row per time step, one column per channel. Blank lines and lines
// starting with '#' are skipped.
inline std::vector<std::vector<float>> read_csv_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<float>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r" || line.front() == '#') continue;
    rows.push_back(detail::parse_csv_row(line, line_no));
  }
  return rows;
}

inline TimeSeriesTensor read_stream(const std::filesystem::path& path, std::size_t channels) {
  if (format_for(path) == StreamFormat::F32) {
    const auto values = read_f32(path);
    if (values.size() % channels != 0) {
      throw ParseError(path.string() + ": " + std::to_string(values.size()) + " floats is not a multiple of " +
                       std::to_string(channels) + " channels");
    }
    return TimeSeriesTensor::from_interleaved(channels, values);
  }
  const auto rows = read_csv_rows(path);
  std::vector<float> flat;
  flat.reserve(rows.size() * channels);
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (rows[t].size() != channels) {
      throw ParseError(path.string() + ": row " + std::to_string(t + 1) + " has " + std::to_string(rows[t].size()) +
                       " columns, expected " + std::to_string(channels));
    }
    flat.insert(flat.end(), rows[t].begin(), rows[t].end());
  }
  return TimeSeriesTensor::from_interleaved(channels, flat);
}

inline void write_stream(const std::filesystem::path& path, const TimeSeriesTensor& stream) {
  if (format_for(path) == StreamFormat::F32) {
    write_f32(path, stream.interleaved());
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t t = 0; t < stream.length(); ++t) {
    for (std::size_t c = 0; c < stream.channels(); ++c) {
      if (c) out << ',';
      out << detail::format_float(stream.at(c, t));
    }
    out << '\n';
  }
}

// One record per window output, each flattened time-major (channels
// interleaved per step) like the input formats.
inline void write_outputs(const std::filesystem::path& path, const std::vector<TimeSeriesTensor>& outputs) {
  if (format_for(path) == StreamFormat::F32) {
    std::vector<float> all;
    for (const auto& o : outputs) {
      const auto v = o.interleaved();
      all.insert(all.end(), v.begin(), v.end());
    }
    write_f32(path, all);
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& o : outputs) {
    const auto v = o.interleaved();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out << ',';
      out << detail::format_float(v[i]);
    }
    out << '\n';
  }
}

}  // namespace ssmstream
