#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>

#include "ssmstream/graph.hpp"

namespace ssmstream {

// Operation tallies. A MAC is one multiply-accumulate (plain accumulates in
// pooling and Add count as one each); max/ReLU comparisons are kept apart.
struct OpCounts {
  std::uint64_t macs = 0;
  std::uint64_t compares = 0;

  OpCounts& operator+=(const OpCounts& o) {
    macs += o.macs;
    compares += o.compares;
    return *this;
  }
  friend OpCounts operator+(OpCounts a, const OpCounts& b) { return a += b; }
  OpCounts scaled(std::uint64_t n) const { return {macs * n, compares * n}; }
  bool operator==(const OpCounts&) const = default;
};

// Cost of one output column computed from `span` input columns.
inline OpCounts column_cost(const OperatorSpec& op, std::size_t span) {
  const std::uint64_t c = op.in_channels;
  const std::uint64_t o = op.out_channels;
  const std::uint64_t n = span;
  switch (op.kind) {
    case OpKind::Conv1D: return {o * c * op.kernel, 0};
    case OpKind::AvgPool:
    case OpKind::GlobalAvgPool: return {c * n, 0};
    case OpKind::MaxPool:
    case OpKind::GlobalMaxPool: return {0, c * n};
    case OpKind::Dense: return {o * c * n, 0};
    case OpKind::Attention: return {3 * n * c * c + 2 * n * n * c + n * c + o * c, 0};
    case OpKind::ReLU: return {0, c};
    case OpKind::Add: return {c, 0};
  }
  return {};
}

// Floats of working memory eval_column needs beyond its output.
inline std::size_t column_scratch_size(const OperatorSpec& op, std::size_t span) {
  return op.kind == OpKind::Attention ? 3 * span * op.in_channels + span + op.in_channels : 0;
}

// Computes one output column of a non-pointwise operator from `span` input
// columns. x(j, c) reads channel c of column j, j = 0 being the oldest.
// Conv1D pairs weight tap j with the column j * dilation steps before the newest.
template <class Input>
void eval_column(const OperatorSpec& op, std::size_t span, const Input& x, std::span<float> out,
                 std::span<float> scratch) {
  const std::size_t cin = op.in_channels;
  const float* bias = op.bias ? op.bias->data() : nullptr;
  switch (op.kind) {
    case OpKind::Conv1D: {
      const std::size_t k = op.kernel;
      for (std::size_t o = 0; o < op.out_channels; ++o) {
        float acc = bias ? bias[o] : 0.0f;
        const float* w = op.weights.data() + o * cin * k;
        for (std::size_t i = 0; i < cin; ++i)
          for (std::size_t j = 0; j < k; ++j) acc += w[i * k + j] * x(span - 1 - j * op.dilation, i);
        out[o] = acc;
      }
      return;
    }
    case OpKind::MaxPool:
    case OpKind::GlobalMaxPool:
      for (std::size_t c = 0; c < cin; ++c) {
        float m = -std::numeric_limits<float>::infinity();
        for (std::size_t j = 0; j < span; ++j) m = std::max(m, x(j, c));
        out[c] = m;
      }
      return;
    case OpKind::AvgPool:
    case OpKind::GlobalAvgPool: {
      const float inv = 1.0f / static_cast<float>(span);
      for (std::size_t c = 0; c < cin; ++c) {
        float acc = 0.0f;
        for (std::size_t j = 0; j < span; ++j) acc += x(j, c);
        out[c] = acc * inv;
      }
      return;
    }
    case OpKind::Dense:
      for (std::size_t o = 0; o < op.out_channels; ++o) {
        float acc = bias ? bias[o] : 0.0f;
        const float* w = op.weights.data() + o * cin * span;
        for (std::size_t c = 0; c < cin; ++c)
          for (std::size_t t = 0; t < span; ++t) acc += w[c * span + t] * x(t, c);
        out[o] = acc;
      }
      return;
    case OpKind::Attention: {
      // Single head; rows of q/k/v are time steps. Output is the mean of the
      // attended values, projected by Wo.
      float* q = scratch.data();
      float* kk = q + span * cin;
      float* v = kk + span * cin;
      float* score = v + span * cin;
      const float* wq = op.weights.data();
      const float* wk = wq + cin * cin;
      const float* wv = wk + cin * cin;
      const float* wo = wv + cin * cin;
      for (std::size_t t = 0; t < span; ++t) {
        for (std::size_t a = 0; a < cin; ++a) {
          float sq = 0.0f, sk = 0.0f, sv = 0.0f;
          for (std::size_t c = 0; c < cin; ++c) {
            const float xv = x(t, c);
            sq += wq[a * cin + c] * xv;
            sk += wk[a * cin + c] * xv;
            sv += wv[a * cin + c] * xv;
          }
          q[t * cin + a] = sq;
          kk[t * cin + a] = sk;
          v[t * cin + a] = sv;
        }
      }
      const float scale = 1.0f / std::sqrt(static_cast<float>(cin));
      float* pooled = score + span;
      std::fill(pooled, pooled + cin, 0.0f);
      for (std::size_t t = 0; t < span; ++t) {
        float m = -std::numeric_limits<float>::infinity();
        for (std::size_t u = 0; u < span; ++u) {
          float d = 0.0f;
          for (std::size_t a = 0; a < cin; ++a) d += q[t * cin + a] * kk[u * cin + a];
          score[u] = d * scale;
          m = std::max(m, score[u]);
        }
        float total = 0.0f;
        for (std::size_t u = 0; u < span; ++u) {
          score[u] = std::exp(score[u] - m);
          total += score[u];
        }
        for (std::size_t a = 0; a < cin; ++a) {
          float z = 0.0f;
          for (std::size_t u = 0; u < span; ++u) z += score[u] * v[u * cin + a];
          pooled[a] += z / total;
        }
      }
      const float inv = 1.0f / static_cast<float>(span);
      for (std::size_t o = 0; o < op.out_channels; ++o) {
        float acc = bias ? bias[o] : 0.0f;
        for (std::size_t a = 0; a < cin; ++a) acc += wo[o * cin + a] * (pooled[a] * inv);
        out[o] = acc;
      }
      return;
    }
    case OpKind::ReLU:
    case OpKind::Add:
      break;
  }
}

}  // namespace ssmstream
