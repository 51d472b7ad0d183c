#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hotkit {

/// Thrown when operand shapes do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation produced or consumed NaN/Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a backward pass is handed a cache that does not belong to the
/// forward call it claims to come from.
class CacheError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

using Vector = std::vector<double>;

/// `Self` is `T`, possibly const; used to overload parameter visitors.
template <class Self, class T>
concept ParamsOf = std::same_as<std::remove_const_t<Self>, T>;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix row_vector(std::span<const double> values);
  static Matrix identity(std::size_t n);

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  [[nodiscard]] std::span<double> row(std::size_t r) noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  [[nodiscard]] std::span<double> values() noexcept { return data_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return data_; }

  [[nodiscard]] std::string shape_string() const;
  [[nodiscard]] bool all_finite() const noexcept;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// --- dense kernels -----------------------------------------------------------

Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ·b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a·bᵀ without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
void add_inplace(Matrix& dst, const Matrix& src);
void add_inplace(std::span<double> dst, std::span<const double> src);
Vector column_sums(const Matrix& m);
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows);

/// Row-wise softmax with max subtraction; each output row is a probability vector.
Matrix row_softmax(const Matrix& m);
/// Gradient of the logits given the softmax output and the gradient of the output.
Matrix row_softmax_backward(const Matrix& probs, const Matrix& grad_probs);

void require_finite(const Matrix& m, std::string_view what);

// --- layer normalization -----------------------------------------------------

inline constexpr double kLayerNormEps = 1e-5;

struct LayerNormParams {
  Vector gamma;
  Vector beta;

  static LayerNormParams identity(std::size_t n);
  static LayerNormParams zeros(std::size_t n);
};

template <ParamsOf<LayerNormParams> Self, class F>
void for_each_tensor(Self& p, F&& f, const std::string& prefix = {}) {
  f(prefix + "gamma", std::span(p.gamma));
  f(prefix + "beta", std::span(p.beta));
}

struct LayerNormCache {
  Vector normalized;  // pre-affine x̂
  double inv_std = 0.0;
};

Vector layer_norm(std::span<const double> x, std::span<const double> gamma,
                  std::span<const double> beta, double eps = kLayerNormEps,
                  LayerNormCache* cache = nullptr);

/// Returns ∂L/∂x; accumulates ∂L/∂γ and ∂L/∂β into `grads`.
Vector layer_norm_backward(std::span<const double> grad_out, const LayerNormCache& cache,
                           std::span<const double> gamma, LayerNormParams& grads);

// --- seeded randomness -------------------------------------------------------

/// One SplitMix64 step: returns (output, next state).
constexpr std::pair<std::uint64_t, std::uint64_t> splitmix_next(std::uint64_t state) noexcept {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return {z ^ (z >> 31), state};
}

/// SplitMix64 stream. Every derived draw (uniform, choice, normal, shuffle) is
/// defined in terms of next() so other implementations can reproduce it.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    auto [value, state] = splitmix_next(state_);
    state_ = state;
    return value;
  }

  /// Uniform in [0, 1) from the top 53 bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform index in [0, n) via multiply-high.
  std::size_t choice(std::size_t n);

  /// Standard normal via Box-Muller (consumes two draws).
  double normal() noexcept;

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = choice(i);
      std::swap(items[i - 1], items[j]);
    }
  }
  template <class T>
  void shuffle(std::vector<T>& items) {
    shuffle(std::span<T>(items));
  }

  [[nodiscard]] std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// Uniform in ±sqrt(6/(rows+cols)), filled row-major.
Matrix xavier_init(std::size_t rows, std::size_t cols, SplitMix64& rng);

// --- MLP ---------------------------------------------------------------------

enum class Activation { relu };

/// relu(x·w1 + b1)·w2 + b2
struct MlpParams {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
  Activation activation = Activation::relu;

  static MlpParams zeros(std::size_t d_in, std::size_t d_hidden, std::size_t d_out);
  static MlpParams xavier(std::size_t d_in, std::size_t d_hidden, std::size_t d_out,
                          SplitMix64& rng);

  [[nodiscard]] std::size_t d_in() const noexcept { return w1.rows(); }
  [[nodiscard]] std::size_t d_hidden() const noexcept { return w1.cols(); }
  [[nodiscard]] std::size_t d_out() const noexcept { return w2.cols(); }
  void validate() const;
};

template <ParamsOf<MlpParams> Self, class F>
void for_each_tensor(Self& p, F&& f, const std::string& prefix = {}) {
  f(prefix + "w1", p.w1.values());
  f(prefix + "b1", std::span(p.b1));
  f(prefix + "w2", p.w2.values());
  f(prefix + "b2", std::span(p.b2));
}

struct MlpCache {
  Matrix input;
  Matrix hidden_pre;
  Matrix hidden;
};

Matrix mlp_forward(const Matrix& x, const MlpParams& p, MlpCache* cache = nullptr);

/// Returns ∂L/∂x and accumulates parameter gradients into `grads`.
Matrix mlp_backward(const Matrix& grad_out, const MlpParams& p, const MlpCache& cache,
                    MlpParams& grads);

struct MlpGradients {
  Matrix grad_input;
  MlpParams grad_params;
};

MlpGradients mlp_backward(const Matrix& grad_out, const MlpParams& p, const MlpCache& cache);

// --- parameter flattening ----------------------------------------------------
// Any struct with an ADL-visible for_each_tensor(self, f, prefix) can be
// flattened into a single coordinate vector, in visit order.

template <class P>
std::size_t parameter_count(const P& p) {
  std::size_t n = 0;
  for_each_tensor(p, [&](const std::string&, std::span<const double> t) { n += t.size(); });
  return n;
}

template <class P>
Vector flatten_parameters(const P& p) {
  Vector flat;
  for_each_tensor(p, [&](const std::string&, std::span<const double> t) {
    flat.insert(flat.end(), t.begin(), t.end());
  });
  return flat;
}

template <class P>
void assign_parameters(P& p, std::span<const double> flat) {
  std::size_t offset = 0;
  for_each_tensor(p, [&](const std::string&, std::span<double> t) {
    if (offset + t.size() > flat.size()) throw ShapeError("parameter vector too short");
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), t.size(), t.begin());
    offset += t.size();
  });
  if (offset != flat.size()) throw ShapeError("parameter vector too long");
}

/// dst += src, tensor by tensor; both must have the same layout.
template <class P>
void add_parameters(P& dst, const P& src) {
  const Vector flat = flatten_parameters(src);
  std::size_t offset = 0;
  for_each_tensor(dst, [&](const std::string&, std::span<double> t) {
    if (offset + t.size() > flat.size()) throw ShapeError("add_parameters: layout mismatch");
    for (std::size_t i = 0; i < t.size(); ++i) t[i] += flat[offset + i];
    offset += t.size();
  });
  if (offset != flat.size()) throw ShapeError("add_parameters: layout mismatch");
}

/// Zeroes every tensor in place, keeping shapes.
template <class P>
void zero_parameters(P& p) {
  for_each_tensor(p, [](const std::string&, std::span<double> t) {
    std::fill(t.begin(), t.end(), 0.0);
  });
}

// --- finite differences ------------------------------------------------------

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central differences (f(x+h·eᵢ) − f(x−h·eᵢ)) / 2h for every coordinate.
Vector finite_diff_grad(const ScalarFunction& f, std::span<const double> at, double step = 1e-5);

}  // namespace hotkit
