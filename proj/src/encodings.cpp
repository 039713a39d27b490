#include "pelab/encodings.hpp"

#include <algorithm>
#include <cmath>

#include "pelab/errors.hpp"

namespace pelab::encodings {

namespace {

constexpr double kTableInitStd = 0.02;

}  // namespace

std::string_view to_string(Scheme s) noexcept {
  switch (s) {
    case Scheme::sinusoidal: return "sinusoidal";
    case Scheme::learned: return "learned";
    case Scheme::relative: return "relative";
    case Scheme::alibi: return "alibi";
    case Scheme::wavelet: return "wavelet";
    case Scheme::legendre: return "legendre";
    case Scheme::none: return "none";
  }
  return "none";
}

Scheme parse_scheme(std::string_view name, const std::string& field) {
  for (Scheme s : {Scheme::sinusoidal, Scheme::learned, Scheme::relative, Scheme::alibi,
                   Scheme::wavelet, Scheme::legendre, Scheme::none}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError(field, "unknown scheme '" + std::string(name) + "'");
}

bool is_additive(Scheme s) noexcept {
  return s == Scheme::sinusoidal || s == Scheme::learned || s == Scheme::wavelet ||
         s == Scheme::legendre;
}

double SchemeConfig::alibi_slope() const noexcept {
  return alpha.value_or(0.1 / static_cast<double>(n_max));
}

int SchemeConfig::max_scale() const noexcept {
  if (wavelet_max_scale) return *wavelet_max_scale;
  return static_cast<int>(std::floor(std::log2(static_cast<double>(n_max))));
}

void SchemeConfig::validate() const {
  if (d_model < 1) throw ConfigError("scheme.d_model", "must be at least 1");
  if (scheme == Scheme::sinusoidal && d_model % 2 != 0)
    throw ConfigError("scheme.d_model", "sinusoidal encoding needs an even dimension");
  if (n_max < 2) throw ConfigError("scheme.n_max", "must be at least 2");
  if (alpha && !(*alpha > 0.0)) throw ConfigError("scheme.alpha", "must be positive");
  if (!(gamma > 0.0)) throw ConfigError("scheme.gamma", "must be positive");
  if (clip_k < 1) throw ConfigError("scheme.clip_k", "must be at least 1");
  if (wavelet_max_scale && *wavelet_max_scale < 0)
    throw ConfigError("scheme.wavelet_max_scale", "must be non-negative");
  if (refinement_levels < 6)
    throw ConfigError("scheme.refinement_levels", "must be at least 6");
}

std::size_t RelativeTable::index(std::size_t i, std::size_t j) const noexcept {
  const auto k = static_cast<std::ptrdiff_t>(clip_k);
  const auto d = std::clamp(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(j), -k, k);
  return static_cast<std::size_t>(d + k);
}

LearnedTable init_learned_table(std::size_t n_max, std::size_t d_model, std::uint64_t seed) {
  numkit::SplitMix64 rng(seed);
  LearnedTable t{Matrix(n_max, d_model)};
  for (double& v : t.values.data()) v = kTableInitStd * rng.normal();
  return t;
}

RelativeTable init_relative_table(std::size_t clip_k, std::uint64_t seed) {
  numkit::SplitMix64 rng(seed);
  RelativeTable t{Matrix(1, 2 * clip_k + 1), clip_k};
  for (double& v : t.values.data()) v = kTableInitStd * rng.normal();
  return t;
}

PEMatrix sinusoidal_pe(std::size_t n, std::size_t d_model) {
  if (d_model == 0 || d_model % 2 != 0)
    throw ConfigError("scheme.d_model", "sinusoidal encoding needs an even, positive dimension");
  PEMatrix pe{Matrix(n, d_model)};
  const double dm = static_cast<double>(d_model);
  for (std::size_t i = 0; i < d_model / 2; ++i) {
    const double freq = std::pow(10000.0, 2.0 * static_cast<double>(i) / dm);
    for (std::size_t pos = 0; pos < n; ++pos) {
      const double arg = static_cast<double>(pos) / freq;
      pe.values(pos, 2 * i) = std::sin(arg);
      pe.values(pos, 2 * i + 1) = std::cos(arg);
    }
  }
  return pe;
}

std::span<const double> learned_pe_lookup(const LearnedTable& table, std::size_t pos) noexcept {
  return table.values.row(std::min(pos, table.values.rows() - 1));
}

PEMatrix learned_pe(const LearnedTable& table, std::size_t n) {
  PEMatrix pe{Matrix(n, table.values.cols())};
  for (std::size_t pos = 0; pos < n; ++pos) {
    const auto src = learned_pe_lookup(table, pos);
    std::copy(src.begin(), src.end(), pe.values.row(pos).begin());
  }
  return pe;
}

BiasMatrix alibi_bias(std::size_t n, double alpha) {
  if (!(alpha > 0.0)) throw ConfigError("scheme.alpha", "must be positive");
  BiasMatrix b{Matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t dist = i > j ? i - j : j - i;
      b.values(i, j) = -alpha * static_cast<double>(dist);
    }
  return b;
}

BiasMatrix relative_bias(std::size_t n, const RelativeTable& table, std::size_t clip_k) {
  if (table.values.rows() != 1 || table.values.cols() != 2 * clip_k + 1 ||
      table.clip_k != clip_k) {
    throw ConfigError("scheme.clip_k", "relative table holds " +
                                           std::to_string(table.values.size()) +
                                           " entries, expected " +
                                           std::to_string(2 * clip_k + 1));
  }
  BiasMatrix b{Matrix(n, n)};
  const auto r = table.values.row(0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) b.values(i, j) = r[table.index(i, j)];
  return b;
}

void legendre_values(double x, std::span<double> out) noexcept {
  if (out.empty()) return;
  out[0] = 1.0;
  if (out.size() == 1) return;
  out[1] = x;
  for (std::size_t l = 1; l + 1 < out.size(); ++l) {
    const double ld = static_cast<double>(l);
    out[l + 1] = ((2.0 * ld + 1.0) * x * out[l] - ld * out[l - 1]) / (ld + 1.0);
  }
}

PEMatrix legendre_pe(std::size_t n, const SchemeConfig& cfg) {
  if (!(cfg.gamma > 0.0)) throw ConfigError("scheme.gamma", "must be positive");
  PEMatrix pe{Matrix(n, cfg.d_model)};
  const double scale = cfg.gamma / static_cast<double>(cfg.n_max);
  for (std::size_t pos = 0; pos < n; ++pos)
    legendre_values(std::tanh(scale * static_cast<double>(pos)), pe.values.row(pos));
  return pe;
}

Encoding encode(const SchemeConfig& cfg, std::size_t n, TrainableTables trainable,
                const WaveletTables* tables) {
  cfg.validate();
  Encoding enc;
  switch (cfg.scheme) {
    case Scheme::sinusoidal:
      enc.pe = sinusoidal_pe(n, cfg.d_model);
      break;
    case Scheme::learned:
      if (trainable.learned == nullptr)
        throw UsageError("learned scheme needs a LearnedTable");
      enc.pe = learned_pe(*trainable.learned, n);
      break;
    case Scheme::relative:
      if (trainable.relative == nullptr)
        throw UsageError("relative scheme needs a RelativeTable");
      enc.bias = relative_bias(n, *trainable.relative, cfg.clip_k);
      break;
    case Scheme::alibi:
      enc.bias = alibi_bias(n, cfg.alibi_slope());
      break;
    case Scheme::wavelet:
      if (tables != nullptr) {
        enc.pe = wavelet_pe(n, cfg, *tables);
      } else {
        enc.pe = wavelet_pe(n, cfg, daubechies4_tables(cfg.refinement_levels));
      }
      break;
    case Scheme::legendre:
      enc.pe = legendre_pe(n, cfg);
      break;
    case Scheme::none:
      break;
  }
  return enc;
}

}  // namespace pelab::encodings
