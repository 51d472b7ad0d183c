#include "hotkit/numerics.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace hotkit {

namespace {

[[noreturn]] void shape_mismatch(std::string_view op, const Matrix& a, const Matrix& b) {
  std::ostringstream os;
  os << op << ": shape mismatch " << a.shape_string() << " vs " << b.shape_string();
  throw ShapeError(os.str());
}

void require_same_shape(std::string_view op, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_mismatch(op, a, b);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    std::ostringstream os;
    os << "matrix data length " << data_.size() << " does not match " << rows << "x" << cols;
    throw ShapeError(os.str());
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) shape_mismatch("matmul", a, b);
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) shape_mismatch("matmul_tn", a, b);
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto a_row = a.row(k);
    auto b_row = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a_row[i];
      if (aki == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aki * b_row[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) shape_mismatch("matmul_nt", a, b);
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto a_row = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto b_row = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a_row[k] * b_row[k];
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape("hadamard", a, b);
  Matrix out(a.rows(), a.cols());
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  Matrix out = a;
  add_inplace(out, b);
  return out;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  require_same_shape("subtract", a, b);
  Matrix out = a;
  auto ov = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] -= bv[i];
  return out;
}

void add_inplace(Matrix& dst, const Matrix& src) {
  require_same_shape("add", dst, src);
  add_inplace(dst.values(), src.values());
}

void add_inplace(std::span<double> dst, std::span<const double> src) {
  if (dst.size() != src.size()) throw ShapeError("add: length mismatch");
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

Vector column_sums(const Matrix& m) {
  Vector sums(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) add_inplace(std::span(sums), m.row(i));
  return sums;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= m.rows()) {
      throw ShapeError("gather_rows: row " + std::to_string(rows[i]) + " out of range for " +
                       m.shape_string());
    }
    auto src = m.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Matrix row_softmax(const Matrix& m) {
  if (m.empty()) throw ShapeError("row_softmax: empty matrix");
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto in = m.row(i);
    auto o = out.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - mx);
      total += o[j];
    }
    for (double& v : o) v /= total;
  }
  return out;
}

Matrix row_softmax_backward(const Matrix& probs, const Matrix& grad_probs) {
  require_same_shape("row_softmax_backward", probs, grad_probs);
  Matrix out(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    auto p = probs.row(i);
    auto g = grad_probs.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) dot += p[j] * g[j];
    auto o = out.row(i);
    for (std::size_t j = 0; j < p.size(); ++j) o[j] = p[j] * (g[j] - dot);
  }
  return out;
}

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.all_finite()) throw NumericError(std::string(what) + ": non-finite value");
}

LayerNormParams LayerNormParams::identity(std::size_t n) {
  return {Vector(n, 1.0), Vector(n, 0.0)};
}

LayerNormParams LayerNormParams::zeros(std::size_t n) { return {Vector(n, 0.0), Vector(n, 0.0)}; }

Vector layer_norm(std::span<const double> x, std::span<const double> gamma,
                  std::span<const double> beta, double eps, LayerNormCache* cache) {
  if (x.size() != gamma.size() || x.size() != beta.size()) {
    throw ShapeError("layer_norm: length mismatch (x=" + std::to_string(x.size()) +
                     ", gamma=" + std::to_string(gamma.size()) +
                     ", beta=" + std::to_string(beta.size()) + ")");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("layer_norm: eps must be positive");
  const auto n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  const double inv_std = 1.0 / std::sqrt(var + eps);

  Vector out(x.size());
  Vector normalized(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    normalized[i] = (x[i] - mean) * inv_std;
    out[i] = gamma[i] * normalized[i] + beta[i];
  }
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = inv_std;
  }
  return out;
}

Vector layer_norm_backward(std::span<const double> grad_out, const LayerNormCache& cache,
                           std::span<const double> gamma, LayerNormParams& grads) {
  const std::size_t n = cache.normalized.size();
  if (grad_out.size() != n || gamma.size() != n || grads.gamma.size() != n ||
      grads.beta.size() != n) {
    throw CacheError("layer_norm_backward: cache does not match gradient length");
  }
  Vector dxhat(n);
  double sum_dxhat = 0.0;
  double sum_dxhat_xhat = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    grads.gamma[i] += grad_out[i] * cache.normalized[i];
    grads.beta[i] += grad_out[i];
    dxhat[i] = grad_out[i] * gamma[i];
    sum_dxhat += dxhat[i];
    sum_dxhat_xhat += dxhat[i] * cache.normalized[i];
  }
  const auto nd = static_cast<double>(n);
  Vector dx(n);
  for (std::size_t i = 0; i < n; ++i) {
    dx[i] = cache.inv_std / nd *
            (nd * dxhat[i] - sum_dxhat - cache.normalized[i] * sum_dxhat_xhat);
  }
  return dx;
}

std::size_t SplitMix64::choice(std::size_t n) {
  if (n == 0) throw std::invalid_argument("choice: empty range");
  __extension__ using u128 = unsigned __int128;
  const u128 wide = static_cast<u128>(next()) * static_cast<u128>(n);
  return static_cast<std::size_t>(wide >> 64);
}

double SplitMix64::normal() noexcept {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Matrix xavier_init(std::size_t rows, std::size_t cols, SplitMix64& rng) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("xavier_init: empty shape");
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (double& v : m.values()) v = (2.0 * rng.uniform() - 1.0) * bound;
  return m;
}

MlpParams MlpParams::zeros(std::size_t d_in, std::size_t d_hidden, std::size_t d_out) {
  return {Matrix(d_in, d_hidden), Vector(d_hidden, 0.0), Matrix(d_hidden, d_out),
          Vector(d_out, 0.0), Activation::relu};
}

MlpParams MlpParams::xavier(std::size_t d_in, std::size_t d_hidden, std::size_t d_out,
                            SplitMix64& rng) {
  MlpParams p = zeros(d_in, d_hidden, d_out);
  p.w1 = xavier_init(d_in, d_hidden, rng);
  p.w2 = xavier_init(d_hidden, d_out, rng);
  return p;
}

void MlpParams::validate() const {
  if (b1.size() != w1.cols() || w2.rows() != w1.cols() || b2.size() != w2.cols()) {
    throw ShapeError("mlp params inconsistent: w1 " + w1.shape_string() + ", b1 " +
                     std::to_string(b1.size()) + ", w2 " + w2.shape_string() + ", b2 " +
                     std::to_string(b2.size()));
  }
}

Matrix mlp_forward(const Matrix& x, const MlpParams& p, MlpCache* cache) {
  p.validate();
  if (x.cols() != p.d_in()) shape_mismatch("mlp_forward", x, p.w1);
  Matrix pre = matmul(x, p.w1);
  for (std::size_t i = 0; i < pre.rows(); ++i) add_inplace(pre.row(i), std::span(p.b1));
  Matrix hidden = pre;
  for (double& v : hidden.values()) v = v > 0.0 ? v : 0.0;
  Matrix out = matmul(hidden, p.w2);
  for (std::size_t i = 0; i < out.rows(); ++i) add_inplace(out.row(i), std::span(p.b2));
  if (cache) {
    cache->input = x;
    cache->hidden_pre = std::move(pre);
    cache->hidden = std::move(hidden);
  }
  return out;
}

Matrix mlp_backward(const Matrix& grad_out, const MlpParams& p, const MlpCache& cache,
                    MlpParams& grads) {
  if (grad_out.rows() != cache.hidden.rows() || grad_out.cols() != p.d_out() ||
      cache.hidden.cols() != p.d_hidden() || cache.input.cols() != p.d_in()) {
    throw CacheError("mlp_backward: gradient " + grad_out.shape_string() +
                     " does not match cached forward (hidden " + cache.hidden.shape_string() +
                     ")");
  }
  if (grads.w1.rows() != p.w1.rows() || grads.w1.cols() != p.w1.cols() ||
      grads.w2.rows() != p.w2.rows() || grads.w2.cols() != p.w2.cols()) {
    throw ShapeError("mlp_backward: gradient accumulator has the wrong shape");
  }
  add_inplace(std::span(grads.b2), std::span<const double>(column_sums(grad_out)));
  add_inplace(grads.w2, matmul_tn(cache.hidden, grad_out));
  Matrix d_hidden = matmul_nt(grad_out, p.w2);
  auto pre = cache.hidden_pre.values();
  auto dh = d_hidden.values();
  // relu'(0) := 0
  for (std::size_t i = 0; i < dh.size(); ++i)
    if (!(pre[i] > 0.0)) dh[i] = 0.0;
  add_inplace(std::span(grads.b1), std::span<const double>(column_sums(d_hidden)));
  add_inplace(grads.w1, matmul_tn(cache.input, d_hidden));
  return matmul_nt(d_hidden, p.w1);
}

MlpGradients mlp_backward(const Matrix& grad_out, const MlpParams& p, const MlpCache& cache) {
  MlpGradients g{Matrix(), MlpParams::zeros(p.d_in(), p.d_hidden(), p.d_out())};
  g.grad_input = mlp_backward(grad_out, p, cache, g.grad_params);
  return g;
}

Vector finite_diff_grad(const ScalarFunction& f, std::span<const double> at, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite_diff_grad: step must be positive");
  Vector x(at.begin(), at.end());
  Vector grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double plus = f(x);
    x[i] = orig - step;
    const double minus = f(x);
    x[i] = orig;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericError("finite_diff_grad: non-finite evaluation at coordinate " +
                         std::to_string(i));
    }
    grad[i] = (plus - minus) / (2.0 * step);
  }
  return grad;
}

}  // namespace hotkit
