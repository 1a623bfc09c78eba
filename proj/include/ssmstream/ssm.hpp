#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "ssmstream/bf16.hpp"
#include "ssmstream/graph.hpp"
#include "ssmstream/kernels.hpp"

namespace ssmstream {

enum class Precision { FP32, BF16 };

inline constexpr std::size_t bytes_per_scalar(Precision p) { return p == Precision::FP32 ? 4 : 2; }

inline std::string_view to_string(Precision p) { return p == Precision::FP32 ? "fp32" : "bf16"; }

// Fixed-capacity ring of feature columns. Pushing overwrites the oldest
// column once full, which is the action of the shift/selector pair
// A = [0 I; 0 0], B = [0 ... 0 1]^T on the flattened hidden state.
// BF16 rings narrow on store and widen on load.
class ColumnRing {
 public:
  ColumnRing(std::size_t capacity, std::size_t channels, Precision precision)
      : capacity_(capacity), channels_(channels), precision_(precision) {
    if (capacity == 0 || channels == 0) throw std::invalid_argument("ColumnRing needs capacity and channels >= 1");
    if (precision == Precision::FP32) {
      f32_.assign(capacity * channels, 0.0f);
    } else {
      b16_.assign(capacity * channels, 0);
    }
  }

  void push(std::span<const float> column) {
    const std::size_t base = write_index_ * channels_;
    if (precision_ == Precision::FP32) {
      for (std::size_t c = 0; c < channels_; ++c) f32_[base + c] = column[c];
    } else {
      for (std::size_t c = 0; c < channels_; ++c) b16_[base + c] = bf16_narrow(column[c]).bits;
    }
    write_index_ = (write_index_ + 1) % capacity_;
    if (size_ < capacity_) ++size_;
  }

  // Channel c of the j-th held column, j = 0 being the oldest.
  float at(std::size_t j, std::size_t c) const {
    const std::size_t slot = (write_index_ + capacity_ - size_ + j) % capacity_;
    return load(slot * channels_ + c);
  }

  // Held columns in temporal order, time-major.
  void flatten(std::span<float> out) const {
    for (std::size_t j = 0; j < size_; ++j)
      for (std::size_t c = 0; c < channels_; ++c) out[j * channels_ + c] = at(j, c);
  }

  // Overwrites the newest column in place (running aggregates).
  void store_newest(std::span<const float> column) {
    const std::size_t slot = (write_index_ + capacity_ - 1) % capacity_;
    const std::size_t base = slot * channels_;
    for (std::size_t c = 0; c < channels_; ++c) store(base + c, column[c]);
  }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return size_; }
  std::size_t write_index() const noexcept { return write_index_; }
  Precision precision() const noexcept { return precision_; }
  std::size_t bytes() const noexcept { return capacity_ * channels_ * bytes_per_scalar(precision_); }

 private:
  float load(std::size_t i) const { return precision_ == Precision::FP32 ? f32_[i] : bf16_widen({b16_[i]}); }
  void store(std::size_t i, float v) {
    if (precision_ == Precision::FP32) {
      f32_[i] = v;
    } else {
      b16_[i] = bf16_narrow(v).bits;
    }
  }

  std::size_t capacity_;
  std::size_t channels_;
  Precision precision_;
  std::size_t write_index_ = 0;
  std::size_t size_ = 0;
  std::vector<float> f32_;
  std::vector<std::uint16_t> b16_;
};

// A sliding operator run as a state-space model: tau hidden columns in a
// ring, output g(h) = T(flatten(ring)). Emits at the insert that first fills
// the ring and then on every stride-th insert after it.
class SsmNode {
 public:
  SsmNode(const OperatorSpec& op, std::size_t tau, std::size_t stride, Precision precision)
      : op_(&op), ring_(tau, op.in_channels, precision), stride_(stride) {
    if (stride == 0) throw std::invalid_argument("SsmNode stride must be >= 1");
  }

  // Inserts one column; true when the stride gate fires.
  bool insert(std::span<const float> column) {
    ring_.push(column);
    ++insert_count_;
    return insert_count_ >= tau() && (insert_count_ - tau()) % stride_ == 0;
  }

  // T applied to the ring's contents; requires a full ring.
  void evaluate(std::span<float> out, std::span<float> scratch, OpCounts& counts) const {
    const ColumnRing& ring = ring_;
    eval_column(*op_, tau(), [&ring](std::size_t j, std::size_t c) { return ring.at(j, c); }, out, scratch);
    counts += column_cost(*op_, tau());
  }

  // Insert, and compute into `out` when the gate fires.
  bool push(std::span<const float> column, std::span<float> out, std::span<float> scratch, OpCounts& counts) {
    if (!insert(column)) return false;
    evaluate(out, scratch, counts);
    return true;
  }

  const OperatorSpec& op() const noexcept { return *op_; }
  std::size_t tau() const noexcept { return ring_.capacity(); }
  std::size_t channels() const noexcept { return ring_.channels(); }
  std::size_t stride() const noexcept { return stride_; }
  std::size_t fill_count() const noexcept { return ring_.size(); }
  std::size_t write_index() const noexcept { return ring_.write_index(); }
  std::uint64_t insert_count() const noexcept { return insert_count_; }
  std::size_t state_bytes() const noexcept { return ring_.bytes(); }
  const ColumnRing& ring() const noexcept { return ring_; }

 private:
  const OperatorSpec* op_;
  ColumnRing ring_;
  std::size_t stride_;
  std::uint64_t insert_count_ = 0;
};

// Global max/avg pooling over the last N feature columns as two chained
// state-space models: a one-column running aggregate over chunks of
// chunk_size columns, and a ring of N / chunk_size chunk aggregates.
class TwoStageGlobalPool {
 public:
  TwoStageGlobalPool(OpKind kind, std::size_t feature_length, std::size_t chunk_size, std::size_t channels,
                     Precision precision)
      : kind_(kind),
        feature_length_(feature_length),
        chunk_size_(chunk_size),
        partial_(1, channels, precision),
        chunks_(chunk_size == 0 ? 1 : feature_length / chunk_size, channels, precision),
        work_(channels) {
    if (kind != OpKind::GlobalMaxPool && kind != OpKind::GlobalAvgPool) {
      throw std::invalid_argument("TwoStageGlobalPool wraps GlobalMaxPool or GlobalAvgPool only");
    }
    if (chunk_size == 0 || feature_length % chunk_size != 0) {
      throw std::invalid_argument("chunk size must divide the feature length");
    }
  }

  void push(std::span<const float> column, OpCounts& counts) {
    const std::size_t ch = channels();
    if (count_in_chunk_ == 0) {
      partial_.push(column);
    } else {
      for (std::size_t c = 0; c < ch; ++c) {
        const float held = partial_.at(0, c);
        work_[c] = kind_ == OpKind::GlobalMaxPool ? std::max(held, column[c]) : held + column[c];
      }
      partial_.store_newest(work_);
    }
    if (kind_ == OpKind::GlobalMaxPool) {
      counts.compares += ch;
    } else {
      counts.macs += ch;
    }
    if (++count_in_chunk_ == chunk_size_) {
      for (std::size_t c = 0; c < ch; ++c) work_[c] = partial_.at(0, c);
      chunks_.push(work_);
      count_in_chunk_ = 0;
    }
  }

  // Reduction over the held chunk aggregates.
  void evaluate(std::span<float> out, OpCounts& counts) const {
    const std::size_t ch = channels();
    const std::size_t n = chunks_.size();
    for (std::size_t c = 0; c < ch; ++c) {
      if (kind_ == OpKind::GlobalMaxPool) {
        float m = -std::numeric_limits<float>::infinity();
        for (std::size_t j = 0; j < n; ++j) m = std::max(m, chunks_.at(j, c));
        out[c] = m;
      } else {
        float acc = 0.0f;
        for (std::size_t j = 0; j < n; ++j) acc += chunks_.at(j, c);
        out[c] = acc * (1.0f / static_cast<float>(feature_length_));
      }
    }
    if (kind_ == OpKind::GlobalMaxPool) {
      counts.compares += ch * n;
    } else {
      counts.macs += ch * n;
    }
  }

  OpKind kind() const noexcept { return kind_; }
  std::size_t chunk_size() const noexcept { return chunk_size_; }
  std::size_t feature_length() const noexcept { return feature_length_; }
  std::size_t channels() const noexcept { return partial_.channels(); }
  std::size_t count_in_chunk() const noexcept { return count_in_chunk_; }
  std::size_t state_columns() const noexcept { return 1 + chunks_.capacity(); }
  std::size_t state_bytes() const noexcept { return partial_.bytes() + chunks_.bytes(); }

 private:
  OpKind kind_;
  std::size_t feature_length_;
  std::size_t chunk_size_;
  ColumnRing partial_;
  ColumnRing chunks_;
  std::size_t count_in_chunk_ = 0;
  std::vector<float> work_;
};

}  // namespace ssmstream
