#include "pelab/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <string>

#include "pelab/errors.hpp"

namespace pelab::numkit {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = std::size_t{1} << 18;

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) {
    throw DimensionError(std::string(op) + ": incompatible shapes " + shape(a) + " and " +
                         shape(b));
  }
}

// Eight lanes of doubles; the compiler splits them to whatever width the target has.
using Lanes = double __attribute__((vector_size(64)));
constexpr std::size_t kLanes = sizeof(Lanes) / sizeof(double);

Lanes load(const double* p) {
  Lanes v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

void store(double* p, Lanes v) { std::memcpy(p, &v, sizeof v); }

// c[i][j] += sum over k (ascending) of a(i, k) * b[k][j], for rows [i_begin, i_end).
// a(i, k) lives at a[i * a_row + k * a_col], so one kernel serves a and its transpose.
// Each output entry is accumulated in the same order as the plain triple loop.
void gemm_acc(const double* a, std::size_t a_row, std::size_t a_col, const double* b, double* c,
              std::size_t i_begin, std::size_t i_end, std::size_t inner, std::size_t m) {
  constexpr std::size_t kRows = 4, kCols = 2 * kLanes;
  std::size_t i = i_begin;
  for (; i + kRows <= i_end; i += kRows) {
    std::size_t j = 0;
    for (; j + kCols <= m; j += kCols) {
      Lanes lo[kRows], hi[kRows];
      for (std::size_t r = 0; r < kRows; ++r) {
        lo[r] = load(c + (i + r) * m + j);
        hi[r] = load(c + (i + r) * m + j + kLanes);
      }
      for (std::size_t k = 0; k < inner; ++k) {
        const Lanes blo = load(b + k * m + j), bhi = load(b + k * m + j + kLanes);
        for (std::size_t r = 0; r < kRows; ++r) {
          const double av = a[(i + r) * a_row + k * a_col];
          lo[r] += av * blo;
          hi[r] += av * bhi;
        }
      }
      for (std::size_t r = 0; r < kRows; ++r) {
        store(c + (i + r) * m + j, lo[r]);
        store(c + (i + r) * m + j + kLanes, hi[r]);
      }
    }
    if (j < m) {
      for (std::size_t r = 0; r < kRows; ++r) {
        double* ci = c + (i + r) * m;
        for (std::size_t k = 0; k < inner; ++k) {
          const double av = a[(i + r) * a_row + k * a_col];
          const double* bk = b + k * m;
          for (std::size_t jj = j; jj < m; ++jj) ci[jj] += av * bk[jj];
        }
      }
    }
  }
  for (; i < i_end; ++i) {
    double* ci = c + i * m;
    for (std::size_t k = 0; k < inner; ++k) {
      const double av = a[i * a_row + k * a_col];
      const double* bk = b + k * m;
      for (std::size_t jj = 0; jj < m; ++jj) ci[jj] += av * bk[jj];
    }
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("from_rows: ragged row literal");
    std::copy(row.begin(), row.end(), m.row(i++).begin());
  }
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require(same_shape(other), "operator+=", *this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator*(Matrix a, double s) { return a *= s; }

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul", a, b);
  const std::size_t n = a.rows(), inner = a.cols(), m = b.cols();
  Matrix c(n, m);
  if (n * inner * m < kParallelWork) {
    gemm_acc(a.data().data(), inner, 1, b.data().data(), c.data().data(), 0, n, inner, m);
    return c;
  }
  constexpr std::size_t kBlock = 16;
  const auto blocks = static_cast<std::ptrdiff_t>((n + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::size_t lo = static_cast<std::size_t>(blk) * kBlock;
    gemm_acc(a.data().data(), inner, 1, b.data().data(), c.data().data(), lo,
             std::min(n, lo + kBlock), inner, m);
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt", a, b);
  // Same k-ascending sums as a dot product per entry, but the inner loop runs over contiguous columns.
  return matmul(a, transpose(b));
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  require(a.rows() == b.rows(), "matmul_tn", a, b);
  if (out.rows() != a.cols() || out.cols() != b.cols()) {
    throw DimensionError("matmul_tn_acc: output is " + shape(out) + ", expected " +
                         std::to_string(a.cols()) + "x" + std::to_string(b.cols()));
  }
  gemm_acc(a.data().data(), 1, a.cols(), b.data().data(), out.data().data(), 0, a.cols(), a.rows(),
           b.cols());
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  Matrix c(a.cols(), b.cols());
  matmul_tn_acc(a, b, c);
  return c;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

Matrix column_sums(const Matrix& m) {
  Matrix s(1, m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) s(0, j) += r[j];
  }
  return s;
}

double frobenius_norm(const Matrix& m) noexcept {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "max_abs_diff", a, b);
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
  return d;
}

Matrix softmax_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto in = m.row(i);
    auto o = out.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - mx);
      total += o[j];
    }
    const double inv = 1.0 / total;
    for (double& v : o) v *= inv;
  }
  return out;
}

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul", a, b);
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

}  // namespace serial

AdamState AdamState::for_params(std::span<const Matrix* const> params) {
  AdamState st;
  for (const Matrix* p : params) {
    st.first_moment.emplace_back(p->rows(), p->cols());
    st.second_moment.emplace_back(p->rows(), p->cols());
  }
  return st;
}

void adam_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads,
               AdamState& state, const AdamHyper& hyper) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw DimensionError("adam_step: parameter, gradient and state counts differ");
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (!params[t]->same_shape(*grads[t]) || !params[t]->same_shape(state.first_moment[t]) ||
        !params[t]->same_shape(state.second_moment[t])) {
      throw DimensionError("adam_step: shape mismatch in tensor " + std::to_string(t));
    }
  }
  state.step_count += 1;
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step_count));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step_count));
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto p = params[t]->data();
    const auto g = grads[t]->data();
    auto m = state.first_moment[t].data();
    auto v = state.second_moment[t].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g[i];
      v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= hyper.lr * mhat / (std::sqrt(vhat) + hyper.eps);
    }
  }
}

Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& x,
                        double eps) {
  if (!(eps > 0.0)) throw OracleError("finite_diff_grad: eps must be positive");
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe.data()[i];
    probe.data()[i] = orig + eps;
    const double up = f(probe);
    probe.data()[i] = orig - eps;
    const double down = f(probe);
    probe.data()[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw OracleError("finite_diff_grad: non-finite function value at coordinate " +
                        std::to_string(i));
    }
    grad.data()[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

std::uint64_t SplitMix64::next() noexcept {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() noexcept {
  return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
}

double SplitMix64::normal() noexcept {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t SplitMix64::below(std::uint64_t bound) noexcept {
  // Lemire-style rejection keeps the draw unbiased.
  const std::uint64_t threshold = -bound % bound;
  for (;;) {
    const std::uint64_t r = next();
    if (r >= threshold) return r % bound;
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  SplitMix64 g(seed ^ (stream * 0xd1b54a32d192ed03ULL));
  return g.next();
}

}  // namespace pelab::numkit
