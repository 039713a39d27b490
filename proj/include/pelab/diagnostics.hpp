#pragma once

// Measurements behind the extrapolation and norm claims: distance-to-last-
// trained-position curves, exponential fits to them, the ALiBi attention-gap
// bound with a unit Lipschitz constant, row-norm summaries and the Gram matrix
// of the selected wavelet basis.

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "pelab/encodings.hpp"

namespace pelab::diagnostics {

using encodings::Matrix;
using encodings::PEMatrix;
using encodings::SchemeConfig;

struct CurvePoint {
  std::size_t pos = 0;
  double distance = 0.0;
};

struct DecayCurve {
  std::string scheme;
  std::size_t n_max = 0;
  std::vector<CurvePoint> points;

  /// Distance at pos = n_max - 1 + delta; throws std::out_of_range if absent.
  double at_offset(std::size_t delta) const;
};

/// ‖PE(pos) − PE(n_max − 1)‖₂ for pos in [n_max, max_pos). Bias-only schemes
/// raise UnsupportedScheme. The learned scheme uses a freshly seeded table.
DecayCurve extrapolation_curve(const SchemeConfig& cfg, std::size_t max_pos);

struct DecayFit {
  double rate = 0.0;       // |slope| of log(distance) against pos − n_max
  double slope = 0.0;      // signed slope, negative when the curve decays
  double amplitude = 0.0;  // exp(intercept)
  double residual = 0.0;   // RMS log-domain error
  std::size_t points_used = 0;
  bool degenerate = false;  // every distance was zero
};

/// Least squares on the positive-distance points. An all-zero curve returns a
/// degenerate fit; fewer than three positive points otherwise is a UsageError.
DecayFit fit_decay_rate(const DecayCurve& curve);

struct BiasGapRow {
  std::size_t distance = 0;
  double measured_gap = 0.0;
  double bound = 0.0;
};

struct BiasGapReport {
  double mu = 0.0;
  double alpha = 0.0;
  std::size_t n_max = 0;
  std::size_t context_len = 0;
  std::vector<BiasGapRow> rows;  // distance = n_max … context_len

  bool bound_holds() const noexcept;
};

/// Softmax weight of one probe logit mu + bias against `others` zero logits.
double probe_weight(double mu, double bias, std::size_t others) noexcept;

/// Requires context_len > n_max ≥ 2 and alpha ≥ 0.
BiasGapReport alibi_weight_gap(double mu, double alpha, std::size_t n_max, std::size_t context_len);

struct NormReport {
  double max_row_norm = 0.0;
  double mean_row_norm = 0.0;
  double min_row_norm = 0.0;
};

NormReport norm_report(const PEMatrix& pe);

struct GramReport {
  Matrix gram;                    // d × d inner products over [0, n_max]
  std::vector<bool> interior;     // support fully inside [0, n_max]
  std::vector<std::size_t> boundary_truncated;
  double max_offdiag_interior = 0.0;
  double min_diag_interior = 0.0;
  double max_diag_interior = 0.0;
  double max_offdiag_all = 0.0;
};

/// Riemann-sum inner products of the kept basis on a grid of step
/// 2^-refinement_levels over [0, n_max].
GramReport gram_report(const std::vector<encodings::WaveletBasisFunction>& basis,
                       const encodings::WaveletTables& tables, std::size_t n_max);

// --- export --------------------------------------------------------------------------

void write_curve_csv(const std::vector<DecayCurve>& curves, const std::string& path);
void write_bias_gap_csv(const std::vector<BiasGapReport>& reports, const std::string& path);
void write_gram_csv(const GramReport& report, const std::string& path);

nlohmann::json to_json(const DecayFit& fit);
nlohmann::json to_json(const NormReport& r);
nlohmann::json to_json(const GramReport& r);

}  // namespace pelab::diagnostics
