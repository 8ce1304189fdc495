#pragma once

// Dense row-major tensors and the handful of differentiable operations the
// question-generation model is built from. Every forward op has a matching
// backward that accumulates (+=) into the caller's gradient buffers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "morphoqg/errors.hpp"

namespace morphoqg {

inline std::string shape_string(const std::vector<std::size_t>& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "x" : "") << dims[i];
  os << ']';
  return os.str();
}

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, T fill = T(0))
      : dims_(std::move(dims)), data_(element_count(dims_), fill) {}
  Tensor(std::vector<std::size_t> dims, std::vector<T> data) : dims_(std::move(dims)), data_(std::move(data)) {
    if (element_count(dims_) != data_.size()) {
      throw ShapeMismatch("shape " + shape_string(dims_) + " needs " +
                          std::to_string(element_count(dims_)) + " values, got " +
                          std::to_string(data_.size()));
    }
  }

  static Tensor vector(std::vector<T> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
  }

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const { return dims_.empty() ? 0 : dims_[0]; }
  std::size_t cols() const { return dims_.size() < 2 ? 1 : data_.size() / dims_[0]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  const T& at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<T> row(std::size_t r) { return std::span<T>(data_).subspan(r * cols(), cols()); }
  std::span<const T> row(std::size_t r) const {
    return std::span<const T>(data_).subspan(r * cols(), cols());
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(T(0)); }

  template <typename U>
  Tensor<U> cast() const {
    return Tensor<U>(dims_, std::vector<U>(data_.begin(), data_.end()));
  }

  bool operator==(const Tensor&) const = default;

 private:
  static std::size_t element_count(const std::vector<std::size_t>& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  }

  std::vector<std::size_t> dims_;
  std::vector<T> data_;
};

inline void require_shape(const std::vector<std::size_t>& got, const std::vector<std::size_t>& want,
                          const char* what) {
  if (got != want)
    throw ShapeMismatch(std::string(what) + ": " + shape_string(got) + " vs " + shape_string(want));
}

inline void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw ShapeMismatch(std::string(what) + ": [" + std::to_string(got) + "] vs [" +
                        std::to_string(want) + "]");
}

namespace ops {

// ----------------------------------------------------------- span kernels

/// y += W x, W is rows x cols row-major.
template <typename T>
void gemv(std::span<const T> w, std::size_t rows, std::size_t cols, std::span<const T> x,
          std::span<T> y) {
  require_size(x.size(), cols, "gemv input");
  require_size(y.size(), rows, "gemv output");
  const T* wp = w.data();
  for (std::size_t r = 0; r < rows; ++r, wp += cols) {
    T acc = T(0);
    for (std::size_t c = 0; c < cols; ++c) acc += wp[c] * x[c];
    y[r] += acc;
  }
}

/// dx += W^T dy.
template <typename T>
void gemv_t(std::span<const T> w, std::size_t rows, std::size_t cols, std::span<const T> dy,
            std::span<T> dx) {
  require_size(dy.size(), rows, "gemv_t input");
  require_size(dx.size(), cols, "gemv_t output");
  const T* wp = w.data();
  for (std::size_t r = 0; r < rows; ++r, wp += cols) {
    const T g = dy[r];
    if (g == T(0)) continue;
    for (std::size_t c = 0; c < cols; ++c) dx[c] += wp[c] * g;
  }
}

/// dW += dy x^T.
template <typename T>
void ger(std::span<T> dw, std::size_t rows, std::size_t cols, std::span<const T> dy,
         std::span<const T> x) {
  require_size(dy.size(), rows, "ger rows");
  require_size(x.size(), cols, "ger cols");
  T* wp = dw.data();
  for (std::size_t r = 0; r < rows; ++r, wp += cols) {
    const T g = dy[r];
    if (g == T(0)) continue;
    for (std::size_t c = 0; c < cols; ++c) wp[c] += g * x[c];
  }
}

template <typename T>
T dot(std::span<const T> a, std::span<const T> b) {
  require_size(b.size(), a.size(), "dot");
  T acc = T(0);
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y) {
  require_size(y.size(), x.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// ----------------------------------------------------------- matmul

/// C = A B for A m x k, B k x n.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dims()[1] != b.dims()[0])
    throw ShapeMismatch("matmul: " + shape_string(a.dims()) + " x " + shape_string(b.dims()));
  const std::size_t m = a.dims()[0], k = a.dims()[1], n = b.dims()[1];
  Tensor<T> c({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a.at(i, p);
      for (std::size_t j = 0; j < n; ++j) c.at(i, j) += av * b.at(p, j);
    }
  return c;
}

/// dA += dC B^T, dB += A^T dC.
template <typename T>
void matmul_backward(const Tensor<T>& a, const Tensor<T>& b, const Tensor<T>& dc, Tensor<T>& da,
                     Tensor<T>& db) {
  const std::size_t m = a.dims()[0], k = a.dims()[1], n = b.dims()[1];
  require_shape(dc.dims(), {m, n}, "matmul_backward dC");
  require_shape(da.dims(), a.dims(), "matmul_backward dA");
  require_shape(db.dims(), b.dims(), "matmul_backward dB");
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      T acc = T(0);
      for (std::size_t j = 0; j < n; ++j) acc += dc.at(i, j) * b.at(p, j);
      da.at(i, p) += acc;
    }
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t i = 0; i < m; ++i) {
      const T av = a.at(i, p);
      for (std::size_t j = 0; j < n; ++j) db.at(p, j) += av * dc.at(i, j);
    }
}

// ----------------------------------------------------------- elementwise

template <typename T>
std::vector<T> add(std::span<const T> a, std::span<const T> b) {
  require_size(b.size(), a.size(), "add");
  std::vector<T> y(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] + b[i];
  return y;
}

template <typename T>
std::vector<T> concat(std::initializer_list<std::span<const T>> parts) {
  std::vector<T> y;
  for (const auto& p : parts) y.insert(y.end(), p.begin(), p.end());
  return y;
}

/// Splits dy back into the concatenated pieces, accumulating into each.
template <typename T>
void concat_backward(std::span<const T> dy, std::initializer_list<std::span<T>> parts) {
  std::size_t off = 0;
  for (const auto& p : parts) {
    if (off + p.size() > dy.size()) throw ShapeMismatch("concat_backward: pieces exceed gradient");
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += dy[off + i];
    off += p.size();
  }
  require_size(off, dy.size(), "concat_backward");
}

template <typename T>
T sigmoid(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}

template <typename T>
void tanh_inplace(std::span<T> x) {
  for (T& v : x) v = std::tanh(v);
}

template <typename T>
void sigmoid_inplace(std::span<T> x) {
  for (T& v : x) v = sigmoid(v);
}

/// dx += dy * (1 - y^2), y = tanh(x).
template <typename T>
void tanh_backward(std::span<const T> y, std::span<const T> dy, std::span<T> dx) {
  require_size(dy.size(), y.size(), "tanh_backward");
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] += dy[i] * (T(1) - y[i] * y[i]);
}

/// dx += dy * y (1 - y), y = sigmoid(x).
template <typename T>
void sigmoid_backward(std::span<const T> y, std::span<const T> dy, std::span<T> dx) {
  require_size(dy.size(), y.size(), "sigmoid_backward");
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] += dy[i] * y[i] * (T(1) - y[i]);
}

// ----------------------------------------------------------- softmax

/// Max-subtracted softmax; never produces NaN for finite input.
template <typename T>
std::vector<T> softmax(std::span<const T> x) {
  if (x.empty()) return {};
  const T mx = *std::max_element(x.begin(), x.end());
  std::vector<T> y(x.size());
  T sum = T(0);
  for (std::size_t i = 0; i < x.size(); ++i) sum += (y[i] = std::exp(x[i] - mx));
  for (T& v : y) v /= sum;
  return y;
}

/// dx += y * (dy - <dy, y>).
template <typename T>
void softmax_backward(std::span<const T> y, std::span<const T> dy, std::span<T> dx) {
  require_size(dy.size(), y.size(), "softmax_backward");
  const T inner = dot(dy, y);
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] += y[i] * (dy[i] - inner);
}

// ----------------------------------------------------------- maxout

/// Unit j takes the max of x[j*pieces .. j*pieces+pieces-1]; the first
/// maximal piece wins ties and is the one that receives the gradient.
template <typename T>
std::vector<T> maxout(std::span<const T> x, std::size_t pieces, std::vector<std::size_t>& argmax) {
  if (pieces == 0 || x.size() % pieces != 0)
    throw ShapeMismatch("maxout: [" + std::to_string(x.size()) + "] not divisible by " +
                        std::to_string(pieces) + " pieces");
  const std::size_t units = x.size() / pieces;
  std::vector<T> y(units);
  argmax.assign(units, 0);
  for (std::size_t j = 0; j < units; ++j) {
    std::size_t best = j * pieces;
    for (std::size_t p = 1; p < pieces; ++p)
      if (x[j * pieces + p] > x[best]) best = j * pieces + p;
    argmax[j] = best;
    y[j] = x[best];
  }
  return y;
}

template <typename T>
void maxout_backward(std::span<const T> dy, std::span<const std::size_t> argmax, std::span<T> dx) {
  require_size(argmax.size(), dy.size(), "maxout_backward");
  for (std::size_t j = 0; j < dy.size(); ++j) dx[argmax[j]] += dy[j];
}

// ----------------------------------------------------------- dropout

/// Inverted dropout: kept units are scaled by 1 / (1 - rate). The mask holds
/// the per-unit multiplier (0 or the scale). rate == 0 is the identity.
template <typename T, typename Rng>
std::vector<T> dropout(std::span<const T> x, double rate, Rng& rng, std::vector<T>& mask) {
  mask.assign(x.size(), T(1));
  if (rate > 0.0) {
    std::bernoulli_distribution keep(1.0 - rate);
    const T scale = static_cast<T>(1.0 / (1.0 - rate));
    for (T& m : mask) m = keep(rng) ? scale : T(0);
  }
  std::vector<T> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * mask[i];
  return y;
}

template <typename T>
void dropout_backward(std::span<const T> dy, std::span<const T> mask, std::span<T> dx) {
  require_size(mask.size(), dy.size(), "dropout_backward");
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * mask[i];
}

// ----------------------------------------------------------- pooling

/// Mean of rows first..last (inclusive) of an n x d matrix.
template <typename T>
std::vector<T> mean_rows(const Tensor<T>& x, std::size_t first, std::size_t last) {
  if (x.rank() != 2 || first > last || last >= x.rows())
    throw ShapeMismatch("mean_rows: rows " + std::to_string(first) + ".." + std::to_string(last) +
                        " of " + shape_string(x.dims()));
  std::vector<T> y(x.cols(), T(0));
  const T inv = T(1) / static_cast<T>(last - first + 1);
  for (std::size_t r = first; r <= last; ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) y[c] += x.at(r, c) * inv;
  return y;
}

template <typename T>
void mean_rows_backward(std::span<const T> dy, std::size_t first, std::size_t last, Tensor<T>& dx) {
  require_size(dy.size(), dx.cols(), "mean_rows_backward");
  const T inv = T(1) / static_cast<T>(last - first + 1);
  for (std::size_t r = first; r <= last; ++r)
    for (std::size_t c = 0; c < dx.cols(); ++c) dx.at(r, c) += dy[c] * inv;
}

// ----------------------------------------------------------- embedding

template <typename T>
std::span<const T> embedding(const Tensor<T>& table, std::size_t id) {
  if (id >= table.rows())
    throw IndexOutOfVocab("embedding id " + std::to_string(id) + " >= table rows " +
                          std::to_string(table.rows()));
  return table.row(id);
}

template <typename T>
void embedding_backward(std::span<const T> dy, std::size_t id, Tensor<T>& dtable) {
  require_size(dy.size(), dtable.cols(), "embedding_backward");
  auto row = dtable.row(id);
  for (std::size_t c = 0; c < dy.size(); ++c) row[c] += dy[c];
}

}  // namespace ops
}  // namespace morphoqg
