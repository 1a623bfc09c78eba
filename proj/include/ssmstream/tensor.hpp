#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssmstream {

// Channel-major float buffer over a time axis: element (c, t) lives at
// data[c * length + t].
class TimeSeriesTensor {
 public:
  TimeSeriesTensor() : TimeSeriesTensor(1, 0) {}

  TimeSeriesTensor(std::size_t channels, std::size_t length)
      : channels_(channels), length_(length), data_(channels * length, 0.0f) {
    if (channels == 0) throw std::invalid_argument("TimeSeriesTensor: channels must be >= 1");
  }

  TimeSeriesTensor(std::size_t channels, std::size_t length, std::vector<float> data)
      : channels_(channels), length_(length), data_(std::move(data)) {
    if (channels == 0) throw std::invalid_argument("TimeSeriesTensor: channels must be >= 1");
    if (data_.size() != channels * length) {
      throw std::invalid_argument("TimeSeriesTensor: data size " + std::to_string(data_.size()) +
                                  " != channels x length " + std::to_string(channels * length));
    }
  }

  // Builds from time-major (per step, channels interleaved) samples.
  static TimeSeriesTensor from_interleaved(std::size_t channels, std::span<const float> samples) {
    if (channels == 0 || samples.size() % channels != 0) {
      throw std::invalid_argument("TimeSeriesTensor: interleaved size not a multiple of channels");
    }
    const std::size_t length = samples.size() / channels;
    TimeSeriesTensor out(channels, length);
    for (std::size_t t = 0; t < length; ++t)
      for (std::size_t c = 0; c < channels; ++c) out.at(c, t) = samples[t * channels + c];
    return out;
  }

  std::size_t channels() const noexcept { return channels_; }
  std::size_t length() const noexcept { return length_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }

  float& at(std::size_t c, std::size_t t) { return data_[c * length_ + t]; }
  float at(std::size_t c, std::size_t t) const { return data_[c * length_ + t]; }

  std::span<const float> channel(std::size_t c) const {
    return std::span<const float>(data_).subspan(c * length_, length_);
  }

  // Copies time step t into `out` (size = channels).
  void column(std::size_t t, std::span<float> out) const {
    for (std::size_t c = 0; c < channels_; ++c) out[c] = at(c, t);
  }

  TimeSeriesTensor slice(std::size_t begin, std::size_t count) const {
    if (begin + count > length_) throw std::out_of_range("TimeSeriesTensor::slice past end");
    TimeSeriesTensor out(channels_, count);
    for (std::size_t c = 0; c < channels_; ++c)
      for (std::size_t t = 0; t < count; ++t) out.at(c, t) = at(c, begin + t);
    return out;
  }

  std::vector<float> interleaved() const {
    std::vector<float> out(data_.size());
    for (std::size_t t = 0; t < length_; ++t)
      for (std::size_t c = 0; c < channels_; ++c) out[t * channels_ + c] = at(c, t);
    return out;
  }

  bool operator==(const TimeSeriesTensor&) const = default;

 private:
  std::size_t channels_;
  std::size_t length_;
  std::vector<float> data_;
};

}  // namespace ssmstream
