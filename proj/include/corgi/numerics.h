// Copyright 2026 The corgi-lab Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major matrices and a counter-based random stream. Every kernel
// accumulates in a fixed loop order so that a row of a product depends only
// on the corresponding row of the left operand; partial recomputation relies
// on this for bit-exact agreement with full evaluation.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace corgi {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return values_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }

  bool all_finite() const;

  friend bool operator==(const Matrix& a, const Matrix& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Counter-based generator. Output k is a pure function of (seed, k), so a
// stream can be replayed or split without shared mutable state.
struct SeededRng {
  std::uint64_t seed = 0;
  std::uint64_t counter = 0;

  // Raw 64-bit word at the current counter; advances by one.
  std::uint64_t next_u64();
  // Uniform in the open interval (0, 1); advances by one.
  double next_uniform();
  // Uniform integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound);

  // Derived independent stream, e.g. one per (model seed, block index).
  static SeededRng derive(std::uint64_t seed, std::uint64_t stream);
};

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Box-Muller on consecutive uniform pairs: pair k uses counters 2k and 2k+1
// and yields (r cos θ, r sin θ). An odd element count discards the sine half
// of the last pair. The counter advances by 2 * ceil(rows * cols / 2).
Matrix rng_standard_normal(SeededRng& rng, std::size_t rows, std::size_t cols);

Matrix softmax_rows(const Matrix& m);
double frobenius_norm(const Matrix& m);

Matrix matmul(const Matrix& a, const Matrix& b);
// aᵀ·b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a·bᵀ without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// Single output row: x (1×k) · b (k×n) written into out.
void vecmat(std::span<const double> x, const Matrix& b, std::span<double> out);

Matrix transpose(const Matrix& m);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double s);
Matrix select_rows(const Matrix& m, std::span<const std::size_t> rows);
Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t end);
Matrix vstack(const Matrix& top, const Matrix& bottom);

double dot(std::span<const double> a, std::span<const double> b);
double mean_squared_error(const Matrix& a, const Matrix& b);
// Cosine of the flattened matrices. Both zero gives 1, exactly one zero gives 0.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// FNV-1a over the IEEE-754 bit patterns.
std::uint64_t checksum(const Matrix& m);

}  // namespace corgi
