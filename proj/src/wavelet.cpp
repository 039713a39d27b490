#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "pelab/encodings.hpp"
#include "pelab/errors.hpp"

namespace pelab::encodings {

namespace {

constexpr int kMaxCascadeIterations = 1000;
constexpr double kCascadeTolerance = 1e-15;

std::array<double, 4> daubechies4_filter() {
  const double s3 = std::sqrt(3.0);
  const double d = 4.0 * std::numbers::sqrt2;
  return {(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d};
}

double interpolate(const std::vector<double>& samples, double step, double x) noexcept {
  if (samples.empty() || x < 0.0) return 0.0;
  const double t = x / step;
  const auto last = samples.size() - 1;
  if (t > static_cast<double>(last)) return 0.0;
  const auto i = static_cast<std::size_t>(t);
  if (i >= last) return samples[last];
  const double frac = t - static_cast<double>(i);
  return samples[i] + frac * (samples[i + 1] - samples[i]);
}

}  // namespace

double WaveletTables::phi(double x) const noexcept {
  return interpolate(phi_samples, grid_step, x);
}

double WaveletTables::psi(double x) const noexcept {
  return interpolate(psi_samples, grid_step, x);
}

WaveletTables daubechies4_tables(int refinement_levels) {
  if (refinement_levels < 6) {
    throw ConfigError("scheme.refinement_levels",
                      "at least 6 levels are needed, got " + std::to_string(refinement_levels));
  }
  if (refinement_levels > 24) {
    throw ConfigError("scheme.refinement_levels", "more than 24 levels is not supported");
  }
  const auto h = daubechies4_filter();
  const std::size_t per_unit = std::size_t{1} << refinement_levels;
  const std::size_t count = 3 * per_unit + 1;

  // Fixed-grid cascade: grid values of φ(2x - k) are again grid values, so the
  // refinement operator maps the sampled vector to itself and converges to φ.
  std::vector<double> phi(count, 0.0), next(count, 0.0);
  std::fill(phi.begin(), phi.begin() + static_cast<std::ptrdiff_t>(per_unit), 1.0);
  for (int it = 0; it < kMaxCascadeIterations; ++it) {
    double change = 0.0;
    for (std::size_t m = 0; m < count; ++m) {
      double v = 0.0;
      for (std::size_t k = 0; k < 4; ++k) {
        const std::size_t shift = k * per_unit;
        if (2 * m < shift) break;
        const std::size_t src = 2 * m - shift;
        if (src < count) v += h[k] * phi[src];
      }
      next[m] = std::numbers::sqrt2 * v;
      change = std::max(change, std::abs(next[m] - phi[m]));
    }
    phi.swap(next);
    if (it >= refinement_levels && change < kCascadeTolerance) break;
  }

  // ψ(x) = √2 Σ g_k φ(2x - k), g_k = (-1)^k h_{3-k}; support [0, 3].
  const std::array<double, 4> g{h[3], -h[2], h[1], -h[0]};
  std::vector<double> psi(count, 0.0);
  for (std::size_t m = 0; m < count; ++m) {
    double v = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      const std::size_t shift = k * per_unit;
      if (2 * m < shift) break;
      const std::size_t src = 2 * m - shift;
      if (src < count) v += g[k] * phi[src];
    }
    psi[m] = std::numbers::sqrt2 * v;
  }

  WaveletTables t;
  t.refinement_levels = refinement_levels;
  t.grid_step = 1.0 / static_cast<double>(per_unit);
  t.phi_samples = std::move(phi);
  t.psi_samples = std::move(psi);
  t.support_len = 3.0;
  return t;
}

double WaveletBasisFunction::support_begin() const noexcept {
  return std::ldexp(static_cast<double>(shift), scale);
}

double WaveletBasisFunction::support_end() const noexcept {
  return std::ldexp(static_cast<double>(shift) + 3.0, scale);
}

double WaveletBasisFunction::operator()(double pos, const WaveletTables& tables) const noexcept {
  const double arg = std::ldexp(pos, -scale) - static_cast<double>(shift);
  const double amp = std::pow(2.0, -0.5 * scale);
  return amp * (kind == BasisKind::scaling ? tables.phi(arg) : tables.psi(arg));
}

std::vector<WaveletBasisFunction> wavelet_candidates(std::size_t n_max, int max_scale) {
  const double limit = static_cast<double>(n_max);
  std::vector<WaveletBasisFunction> out;
  auto add_scale = [&](BasisKind kind, int j) {
    const double width = std::ldexp(1.0, j);
    // Supports [2^j k, 2^j (k + 3)] with positive overlap on [0, n_max].
    const long first = -2;
    const auto last = static_cast<long>(std::ceil(limit / width)) - 1;
    for (long k = first; k <= last; ++k) {
      WaveletBasisFunction f{kind, j, k, 0.0};
      f.coverage = std::min(f.support_end(), limit) - std::max(f.support_begin(), 0.0);
      if (f.coverage > 0.0) out.push_back(f);
    }
  };
  for (int j = 0; j <= max_scale; ++j) add_scale(BasisKind::wavelet, j);
  add_scale(BasisKind::scaling, max_scale);
  return out;
}

std::vector<WaveletBasisFunction> select_wavelet_basis(std::size_t n_max, int max_scale,
                                                       std::size_t d_model) {
  auto cands = wavelet_candidates(n_max, max_scale);
  if (cands.size() < d_model) {
    throw ConfigError("scheme.d_model", "only " + std::to_string(cands.size()) +
                                            " wavelet basis functions overlap [0, n_max], need " +
                                            std::to_string(d_model));
  }
  std::stable_sort(cands.begin(), cands.end(),
                   [](const WaveletBasisFunction& a, const WaveletBasisFunction& b) {
                     if (a.coverage != b.coverage) return a.coverage > b.coverage;
                     if (a.scale != b.scale) return a.scale < b.scale;
                     if (a.kind != b.kind) return a.kind == BasisKind::scaling;
                     return a.shift < b.shift;
                   });
  cands.resize(d_model);
  return cands;
}

PEMatrix wavelet_pe_raw(std::size_t n, const SchemeConfig& cfg, const WaveletTables& tables) {
  const auto basis = select_wavelet_basis(cfg.n_max, cfg.max_scale(), cfg.d_model);
  PEMatrix pe{Matrix(n, cfg.d_model)};
  for (std::size_t pos = 0; pos < n; ++pos) {
    auto row = pe.values.row(pos);
    for (std::size_t c = 0; c < basis.size(); ++c)
      row[c] = basis[c](static_cast<double>(pos), tables);
  }
  return pe;
}

PEMatrix wavelet_pe(std::size_t n, const SchemeConfig& cfg, const WaveletTables& tables) {
  PEMatrix pe = wavelet_pe_raw(n, cfg, tables);
  for (std::size_t pos = 0; pos < n; ++pos) {
    auto row = pe.values.row(pos);
    double sq = 0.0;
    for (double v : row) sq += v * v;
    if (sq == 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (double& v : row) v *= inv;
  }
  return pe;
}

}  // namespace pelab::encodings
