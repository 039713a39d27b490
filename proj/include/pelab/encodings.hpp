#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pelab/numkit.hpp"

namespace pelab::encodings {

using numkit::Matrix;

enum class Scheme { sinusoidal, learned, relative, alibi, wavelet, legendre, none };

std::string_view to_string(Scheme s) noexcept;
/// Throws ConfigError naming `field` for unknown names.
Scheme parse_scheme(std::string_view name, const std::string& field = "scheme.name");
/// Additive schemes produce a PEMatrix; the others act on attention logits.
bool is_additive(Scheme s) noexcept;

struct SchemeConfig {
  Scheme scheme = Scheme::sinusoidal;
  std::size_t d_model = 64;
  std::size_t n_max = 50;
  /// ALiBi slope; unset means 0.1 / n_max.
  std::optional<double> alpha;
  double gamma = 1.0;
  std::size_t clip_k = 16;
  /// Coarsest wavelet scale J; unset means floor(log2(n_max)).
  std::optional<int> wavelet_max_scale;
  int refinement_levels = 10;

  double alibi_slope() const noexcept;
  int max_scale() const noexcept;
  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

struct PEMatrix {
  Matrix values;  // positions × d_model
  std::size_t positions() const noexcept { return values.rows(); }
  std::size_t dim() const noexcept { return values.cols(); }
};

struct BiasMatrix {
  Matrix values;  // n × n, added to attention logits
  std::size_t size() const noexcept { return values.rows(); }
};

/// Trainable absolute vectors p_0 … p_{n_max-1}.
struct LearnedTable {
  Matrix values;  // n_max × d_model
};

/// Trainable scalar per clipped relative distance k ∈ [-K, K], stored at k + K.
struct RelativeTable {
  Matrix values;  // 1 × (2K + 1)
  std::size_t clip_k = 0;

  std::size_t index(std::size_t i, std::size_t j) const noexcept;
};

// Tables are initialized N(0, 0.02²) from a seeded stream.
LearnedTable init_learned_table(std::size_t n_max, std::size_t d_model, std::uint64_t seed);
RelativeTable init_relative_table(std::size_t clip_k, std::uint64_t seed);

PEMatrix sinusoidal_pe(std::size_t n, std::size_t d_model);

/// Row for `pos`, clipped to the last trained row.
std::span<const double> learned_pe_lookup(const LearnedTable& table, std::size_t pos) noexcept;
PEMatrix learned_pe(const LearnedTable& table, std::size_t n);

BiasMatrix alibi_bias(std::size_t n, double alpha);
BiasMatrix relative_bias(std::size_t n, const RelativeTable& table, std::size_t clip_k);

/// Legendre values P_0(x) … P_{out.size()-1}(x) by the three-term recurrence.
void legendre_values(double x, std::span<double> out) noexcept;
PEMatrix legendre_pe(std::size_t n, const SchemeConfig& cfg);

// --- Daubechies-4 wavelet encoding -------------------------------------------------

/// φ and ψ sampled on the dyadic grid k · 2^-levels over [0, 3].
struct WaveletTables {
  int refinement_levels = 0;
  double grid_step = 0.0;
  std::vector<double> phi_samples;
  std::vector<double> psi_samples;
  double support_len = 3.0;

  /// Linear interpolation; zero outside [0, support_len].
  double phi(double x) const noexcept;
  double psi(double x) const noexcept;
};

WaveletTables daubechies4_tables(int refinement_levels);

enum class BasisKind { scaling, wavelet };

/// 2^(-j/2) f(2^-j · pos - k) with f = φ or ψ; larger j is coarser.
struct WaveletBasisFunction {
  BasisKind kind = BasisKind::wavelet;
  int scale = 0;
  long shift = 0;
  double coverage = 0.0;  // |support ∩ [0, n_max]|

  double support_begin() const noexcept;
  double support_end() const noexcept;
  double operator()(double pos, const WaveletTables& tables) const noexcept;
};

/// All ψ_{j,k} for j = 0..J and φ_{J,k} whose support overlaps [0, n_max].
std::vector<WaveletBasisFunction> wavelet_candidates(std::size_t n_max, int max_scale);

/// The d_model candidates with largest coverage; ties go to smaller j, then
/// scaling before wavelet, then smaller k. Returned in that ranking order.
std::vector<WaveletBasisFunction> select_wavelet_basis(std::size_t n_max, int max_scale,
                                                       std::size_t d_model);

/// Unnormalized basis evaluations, rows = positions.
PEMatrix wavelet_pe_raw(std::size_t n, const SchemeConfig& cfg, const WaveletTables& tables);
/// Rows scaled to unit norm; all-zero rows stay zero.
PEMatrix wavelet_pe(std::size_t n, const SchemeConfig& cfg, const WaveletTables& tables);

// --- Unified construction ----------------------------------------------------------

struct Encoding {
  std::optional<PEMatrix> pe;
  std::optional<BiasMatrix> bias;
};

/// Trainable state needed by the learned and relative schemes.
struct TrainableTables {
  const LearnedTable* learned = nullptr;
  const RelativeTable* relative = nullptr;
};

/// Builds the encoding for sequence length n. Scheme::none yields neither part.
/// Wavelet tables are built on demand unless `tables` is supplied.
Encoding encode(const SchemeConfig& cfg, std::size_t n, TrainableTables trainable = {},
                const WaveletTables* tables = nullptr);

}  // namespace pelab::encodings
