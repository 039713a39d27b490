#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the library's kernels: everything is written with plain nested loops
// over std::vector so that a bug in a library kernel cannot cancel out.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pelab/encodings.hpp"
#include "pelab/model.hpp"
#include "pelab/numkit.hpp"
#include "pelab/tasks.hpp"

namespace oracle {

using Grid = std::vector<std::vector<double>>;
using pelab::numkit::Matrix;

inline Grid to_grid(const Matrix& m) {
  Grid g(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) g[i][j] = m(i, j);
  return g;
}

inline Grid matmul(const Grid& a, const Grid& b) {
  const std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
  Grid out(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      long double acc = 0.0L;
      for (std::size_t t = 0; t < k; ++t) acc += static_cast<long double>(a[i][t]) * b[t][j];
      out[i][j] = static_cast<double>(acc);
    }
  return out;
}

/// exp/sum without max subtraction, in long double.
inline std::vector<double> softmax_direct(const std::vector<double>& row) {
  long double total = 0.0L;
  std::vector<long double> e(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) {
    e[j] = std::isinf(row[j]) ? 0.0L : std::exp(static_cast<long double>(row[j]));
    total += e[j];
  }
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = static_cast<double>(e[j] / total);
  return out;
}

inline double legendre_closed(int l, double x) {
  switch (l) {
    case 0: return 1.0;
    case 1: return x;
    case 2: return (3.0 * x * x - 1.0) / 2.0;
    case 3: return (5.0 * x * x * x - 3.0 * x) / 2.0;
    default: return std::numeric_limits<double>::quiet_NaN();
  }
}

/// Forward pass of the two-layer encoder with scalar loops.
/// `pe` is N × d (or empty), `bias` is N × N (or empty).
inline std::vector<double> encoder_forward(const std::vector<double>& x, const Grid& pe,
                                           const Grid& bias, const pelab::model::EncoderParams& p,
                                           bool causal) {
  const std::size_t n = x.size(), d = p.dims.d_model, f = p.dims.d_ff;
  Grid z(n, std::vector<double>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c)
      z[i][c] = x[i] * p.w_in(0, c) + (pe.empty() ? 0.0 : pe[i][c]);

  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (const auto& L : p.layers) {
    const Grid q = matmul(z, to_grid(L.wq));
    const Grid k = matmul(z, to_grid(L.wk));
    const Grid v = matmul(z, to_grid(L.wv));
    Grid mixed(n, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> logits(n);
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += q[i][c] * k[j][c];
        logits[j] = s * scale + (bias.empty() ? 0.0 : bias[i][j]);
        if (causal && j > i) logits[j] = -std::numeric_limits<double>::infinity();
      }
      const auto w = softmax_direct(logits);
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t c = 0; c < d; ++c) mixed[i][c] += w[j] * v[j][c];
    }
    const Grid attn = matmul(mixed, to_grid(L.wo));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < d; ++c) z[i][c] += attn[i][c];

    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> h(f);
      for (std::size_t u = 0; u < f; ++u) {
        double s = L.b_ff1(0, u);
        for (std::size_t c = 0; c < d; ++c) s += z[i][c] * L.w_ff1(c, u);
        h[u] = s > 0.0 ? s : 0.0;
      }
      std::vector<double> out(d);
      for (std::size_t c = 0; c < d; ++c) {
        double s = L.b_ff2(0, c);
        for (std::size_t u = 0; u < f; ++u) s += h[u] * L.w_ff2(u, c);
        out[c] = s;
      }
      for (std::size_t c = 0; c < d; ++c) z[i][c] += out[c];
    }
  }
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) y[i] += z[i][c] * p.w_out(c, 0);
  return y;
}

struct GradCheck {
  std::string tensor;
  double rel_error = 0.0;
};

/// Loss of one sample; learned and relative encodings are rebuilt from the
/// (possibly perturbed) parameter tables on every call.
inline double sample_loss(const pelab::model::EncoderParams& p,
                          pelab::model::PositionalContext& ctx, const Matrix& x, const Matrix& y) {
  const auto fwd = pelab::model::predict(x, ctx, p);
  return pelab::model::mse_loss(fwd.predictions, y).loss;
}

/// Per-tensor ‖analytic − numeric‖ / max(‖numeric‖, 1e-8) for every trainable tensor.
inline std::vector<GradCheck> gradient_check(const pelab::model::EncoderParams& params,
                                             const pelab::encodings::SchemeConfig& scheme,
                                             const Matrix& x, const Matrix& y, double eps) {
  using namespace pelab;
  model::PositionalContext ctx(scheme);
  const auto fwd = model::predict(x, ctx, params);
  const auto loss = model::mse_loss(fwd.predictions, y);
  const model::EncoderParams analytic = model::encoder_backward(fwd.cache, loss.gradient, params);

  std::vector<GradCheck> out;
  const auto names = params.tensor_names();
  const auto grads = analytic.tensors();
  for (std::size_t t = 0; t < names.size(); ++t) {
    auto probe = params;
    Matrix* target = probe.tensors()[t].tensor;
    const Matrix numeric = numkit::finite_diff_grad(
        [&](const Matrix& v) {
          *target = v;
          return sample_loss(probe, ctx, x, y);
        },
        *params.tensors()[t], eps);
    double diff = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      const double a = grads[t]->data()[i], b = numeric.data()[i];
      diff += (a - b) * (a - b);
      ref += b * b;
    }
    out.push_back({names[t], std::sqrt(diff) / std::max(std::sqrt(ref), 1e-8)});
  }
  return out;
}

/// The seeded N = 8, d_model = 8, d_ff = 16 gradient-check instance. The
/// learned table covers 6 positions so clipped rows are exercised, and the
/// relative table clips at 3.
struct SmallInstance {
  pelab::encodings::SchemeConfig scheme;
  pelab::model::EncoderParams params;
  Matrix x, y;
};

inline SmallInstance small_instance(pelab::encodings::Scheme s, std::uint64_t seed = 7) {
  using namespace pelab;
  SmallInstance inst;
  inst.scheme.scheme = s;
  inst.scheme.d_model = 8;
  inst.scheme.n_max = s == encodings::Scheme::learned ? 6 : 8;
  inst.scheme.clip_k = 3;
  const model::ModelConfig dims{8, 16, false};
  inst.params = model::init_params(dims, inst.scheme, seed);
  // Tables start at N(0, 0.02^2); widen them so their gradients are not tiny.
  if (inst.params.learned) inst.params.learned->values *= 25.0;
  if (inst.params.relative) inst.params.relative->values *= 25.0;
  const auto data = tasks::gen_running_sum(1, 8, seed);
  inst.x = data.inputs[0];
  inst.y = data.targets[0];
  return inst;
}

}  // namespace oracle
