// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0

#include "corgi/numerics.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace corgi {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch (" +
                                std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw std::invalid_argument("Matrix: values length " +
                                std::to_string(values_.size()) +
                                " != rows * cols");
  }
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) {
      throw std::invalid_argument("Matrix::from_rows: ragged rows");
    }
    values.insert(values.end(), r.begin(), r.end());
  }
  return Matrix(rows.size(), cols, std::move(values));
}

bool Matrix::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t SeededRng::next_u64() {
  // Key the stream by a scrambled seed so nearby seeds do not share offsets.
  const std::uint64_t key = mix64(seed ^ 0x243f6a8885a308d3ULL);
  return mix64(key + 0x9e3779b97f4a7c15ULL * counter++);
}

double SeededRng::next_uniform() {
  // Top 53 bits, shifted by half an ulp so 0 is never produced.
  const std::uint64_t bits = next_u64() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

std::uint64_t SeededRng::next_below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("next_below: bound is zero");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  for (;;) {
    const std::uint64_t x = next_u64();
    if (x < limit) return x % bound;
  }
}

SeededRng SeededRng::derive(std::uint64_t seed, std::uint64_t stream) {
  return SeededRng{mix64(seed) ^ mix64(stream ^ 0x5851f42d4c957f2dULL), 0};
}

Matrix rng_standard_normal(SeededRng& rng, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("empty shape");
  Matrix out(rows, cols);
  auto& v = out.mutable_values();
  for (std::size_t i = 0; i < v.size(); i += 2) {
    const double u1 = rng.next_uniform();
    const double u2 = rng.next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    v[i] = r * std::cos(theta);
    if (i + 1 < v.size()) v[i + 1] = r * std::sin(theta);
  }
  return out;
}

Matrix softmax_rows(const Matrix& m) {
  if (m.empty()) throw std::invalid_argument("softmax_rows: empty matrix");
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto in = m.row(r);
    auto dst = out.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      dst[c] = std::exp(in[c] - mx);
      sum += dst[c];
    }
    for (double& x : dst) x /= sum;
  }
  return out;
}

double frobenius_norm(const Matrix& m) {
  double sum = 0.0;
  for (double v : m.values()) sum += v * v;
  return std::sqrt(sum);
}

void vecmat(std::span<const double> x, const Matrix& b, std::span<double> out) {
  if (x.size() != b.rows() || out.size() != b.cols()) {
    throw std::invalid_argument("vecmat: shape mismatch");
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xk = x[k];
    auto brow = b.row(k);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += xk * brow[j];
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimension mismatch");
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) vecmat(a.row(i), b, out.row(i));
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("matmul_tn: row count mismatch");
  }
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto arow = a.row(k);
    auto brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      auto orow = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += arow[i] * brow[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("matmul_nt: column count mismatch");
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      out(i, j) = dot(a.row(i), b.row(j));
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out(c, r) = m(r, c);
  }
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out = a;
  auto& v = out.mutable_values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += b.values()[i];
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "sub");
  Matrix out = a;
  auto& v = out.mutable_values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= b.values()[i];
  return out;
}

Matrix scale(const Matrix& m, double s) {
  Matrix out = m;
  for (double& v : out.mutable_values()) v *= s;
  return out;
}

Matrix select_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= m.rows()) {
      throw std::out_of_range("select_rows: row index out of range");
    }
    std::copy_n(m.row(rows[i]).begin(), m.cols(), out.row(i).begin());
  }
  return out;
}

Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t end) {
  if (begin > end || end > m.rows()) {
    throw std::out_of_range("slice_rows: bad range");
  }
  std::vector<double> values(m.values().begin() + begin * m.cols(),
                             m.values().begin() + end * m.cols());
  return Matrix(end - begin, m.cols(), std::move(values));
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
  if (top.cols() != bottom.cols()) {
    throw std::invalid_argument("vstack: column count mismatch");
  }
  std::vector<double> values = top.values();
  values.insert(values.end(), bottom.values().begin(), bottom.values().end());
  return Matrix(top.rows() + bottom.rows(), top.cols(), std::move(values));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double mean_squared_error(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "mean_squared_error");
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine_similarity: length mismatch");
  }
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 && nb == 0.0) return 1.0;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

std::uint64_t checksum(const Matrix& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::uint64_t word) {
    for (int i = 0; i < 8; ++i) {
      h ^= (word >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  feed(m.rows());
  feed(m.cols());
  for (double v : m.values()) feed(std::bit_cast<std::uint64_t>(v));
  return h;
}

}  // namespace corgi
