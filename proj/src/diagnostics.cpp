#include "pelab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pelab/csv.hpp"
#include "pelab/errors.hpp"

namespace pelab::diagnostics {

using encodings::Scheme;

double DecayCurve::at_offset(std::size_t delta) const {
  const std::size_t pos = n_max - 1 + delta;
  for (const auto& p : points)
    if (p.pos == pos) return p.distance;
  throw std::out_of_range("decay curve has no point at offset " + std::to_string(delta));
}

DecayCurve extrapolation_curve(const SchemeConfig& cfg, std::size_t max_pos) {
  cfg.validate();
  if (!encodings::is_additive(cfg.scheme)) {
    throw UnsupportedScheme("extrapolation_curve: scheme '" +
                            std::string(encodings::to_string(cfg.scheme)) +
                            "' has no additive encoding vector");
  }
  if (max_pos <= cfg.n_max) throw UsageError("extrapolation_curve: max_pos must exceed n_max");

  encodings::Encoding enc;
  if (cfg.scheme == Scheme::learned) {
    const auto table = encodings::init_learned_table(cfg.n_max, cfg.d_model, 0);
    enc = encodings::encode(cfg, max_pos, {&table, nullptr});
  } else {
    enc = encodings::encode(cfg, max_pos);
  }
  const Matrix& pe = enc.pe->values;
  const auto ref = pe.row(cfg.n_max - 1);

  DecayCurve curve{std::string(encodings::to_string(cfg.scheme)), cfg.n_max, {}};
  for (std::size_t pos = cfg.n_max; pos < max_pos; ++pos) {
    const auto row = pe.row(pos);
    double sq = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double diff = row[c] - ref[c];
      sq += diff * diff;
    }
    curve.points.push_back({pos, std::sqrt(sq)});
  }
  return curve;
}

DecayFit fit_decay_rate(const DecayCurve& curve) {
  std::vector<double> xs, ys;
  for (const auto& p : curve.points) {
    if (p.distance > 0.0) {
      xs.push_back(static_cast<double>(p.pos) - static_cast<double>(curve.n_max));
      ys.push_back(std::log(p.distance));
    }
  }
  DecayFit fit;
  if (xs.empty()) {
    fit.degenerate = true;
    return fit;
  }
  if (xs.size() < 3) throw UsageError("fit_decay_rate: need at least 3 points with positive distance");

  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  const double intercept = my - fit.slope * mx;
  fit.rate = std::abs(fit.slope);
  fit.amplitude = std::exp(intercept);
  double sse = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (intercept + fit.slope * xs[i]);
    sse += e * e;
  }
  fit.residual = std::sqrt(sse / n);
  fit.points_used = xs.size();
  return fit;
}

bool BiasGapReport::bound_holds() const noexcept {
  return std::all_of(rows.begin(), rows.end(),
                     [](const BiasGapRow& r) { return r.measured_gap <= r.bound; });
}

double probe_weight(double mu, double bias, std::size_t others) noexcept {
  const double t = mu + bias;
  const double k = static_cast<double>(others);
  if (t >= 0.0) return 1.0 / (1.0 + k * std::exp(-t));
  const double e = std::exp(t);
  return e / (e + k);
}

BiasGapReport alibi_weight_gap(double mu, double alpha, std::size_t n_max, std::size_t context_len) {
  if (n_max < 2 || context_len <= n_max)
    throw UsageError("alibi_weight_gap: need context_len > n_max >= 2");
  if (!(alpha >= 0.0)) throw UsageError("alibi_weight_gap: alpha must be non-negative");
  BiasGapReport rep{mu, alpha, n_max, context_len, {}};
  const std::size_t others = context_len - 1;
  const double at_train = probe_weight(mu, -alpha * static_cast<double>(n_max), others);
  for (std::size_t d = n_max; d <= context_len; ++d) {
    const double w = probe_weight(mu, -alpha * static_cast<double>(d), others);
    rep.rows.push_back({d, std::abs(w - at_train), alpha * static_cast<double>(d - n_max)});
  }
  return rep;
}

NormReport norm_report(const PEMatrix& pe) {
  NormReport r;
  if (pe.positions() == 0) return r;
  r.min_row_norm = std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (std::size_t i = 0; i < pe.positions(); ++i) {
    double sq = 0.0;
    for (double v : pe.values.row(i)) sq += v * v;
    const double norm = std::sqrt(sq);
    r.max_row_norm = std::max(r.max_row_norm, norm);
    r.min_row_norm = std::min(r.min_row_norm, norm);
    total += norm;
  }
  r.mean_row_norm = total / static_cast<double>(pe.positions());
  return r;
}

GramReport gram_report(const std::vector<encodings::WaveletBasisFunction>& basis,
                       const encodings::WaveletTables& tables, std::size_t n_max) {
  const std::size_t per_unit = std::size_t{1} << tables.refinement_levels;
  const double step = 1.0 / static_cast<double>(per_unit);
  const std::size_t total = n_max * per_unit;
  const double limit = static_cast<double>(n_max);

  struct Sampled {
    std::size_t first = 0;
    std::vector<double> values;
  };
  std::vector<Sampled> sampled(basis.size());
  GramReport rep;
  rep.interior.resize(basis.size());
  for (std::size_t b = 0; b < basis.size(); ++b) {
    const auto& f = basis[b];
    rep.interior[b] = f.support_begin() >= 0.0 && f.support_end() <= limit;
    if (!rep.interior[b]) rep.boundary_truncated.push_back(b);
    const double lo = std::max(f.support_begin(), 0.0);
    const double hi = std::min(f.support_end(), limit);
    const auto first = static_cast<std::size_t>(std::ceil(lo / step));
    const auto last = std::min(total, static_cast<std::size_t>(std::ceil(hi / step)));
    sampled[b].first = first;
    for (std::size_t m = first; m < last; ++m)
      sampled[b].values.push_back(f(static_cast<double>(m) * step, tables));
  }

  rep.gram = Matrix(basis.size(), basis.size());
  for (std::size_t a = 0; a < basis.size(); ++a) {
    for (std::size_t b = a; b < basis.size(); ++b) {
      const auto& sa = sampled[a];
      const auto& sb = sampled[b];
      const std::size_t lo = std::max(sa.first, sb.first);
      const std::size_t hi = std::min(sa.first + sa.values.size(), sb.first + sb.values.size());
      double acc = 0.0;
      for (std::size_t m = lo; m < hi; ++m)
        acc += sa.values[m - sa.first] * sb.values[m - sb.first];
      rep.gram(a, b) = rep.gram(b, a) = acc * step;
    }
  }

  rep.min_diag_interior = std::numeric_limits<double>::infinity();
  rep.max_diag_interior = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < basis.size(); ++a) {
    if (rep.interior[a]) {
      rep.min_diag_interior = std::min(rep.min_diag_interior, rep.gram(a, a));
      rep.max_diag_interior = std::max(rep.max_diag_interior, rep.gram(a, a));
    }
    for (std::size_t b = 0; b < basis.size(); ++b) {
      if (a == b) continue;
      const double v = std::abs(rep.gram(a, b));
      rep.max_offdiag_all = std::max(rep.max_offdiag_all, v);
      if (rep.interior[a] && rep.interior[b])
        rep.max_offdiag_interior = std::max(rep.max_offdiag_interior, v);
    }
  }
  return rep;
}

void write_curve_csv(const std::vector<DecayCurve>& curves, const std::string& path) {
  csv::Writer w(path, {"scheme", "n_max", "pos", "delta_pos", "distance"});
  for (const auto& c : curves)
    for (const auto& p : c.points) w.row(c.scheme, c.n_max, p.pos, p.pos - (c.n_max - 1), p.distance);
  w.close();
}

void write_bias_gap_csv(const std::vector<BiasGapReport>& reports, const std::string& path) {
  csv::Writer w(path, {"mu", "alpha", "n_max", "distance", "measured_gap", "bound"});
  for (const auto& r : reports)
    for (const auto& row : r.rows) w.row(r.mu, r.alpha, r.n_max, row.distance, row.measured_gap, row.bound);
  w.close();
}

void write_gram_csv(const GramReport& report, const std::string& path) {
  csv::Writer w(path, {"a", "b", "inner_product", "a_interior", "b_interior"});
  for (std::size_t a = 0; a < report.gram.rows(); ++a)
    for (std::size_t b = 0; b < report.gram.cols(); ++b)
      w.row(a, b, report.gram(a, b), static_cast<int>(report.interior[a]),
            static_cast<int>(report.interior[b]));
  w.close();
}

nlohmann::json to_json(const DecayFit& fit) {
  return {{"rate", fit.rate},           {"slope", fit.slope},
          {"amplitude", fit.amplitude}, {"residual", fit.residual},
          {"points_used", fit.points_used}, {"degenerate", fit.degenerate}};
}

nlohmann::json to_json(const NormReport& r) {
  return {{"max_row_norm", r.max_row_norm},
          {"mean_row_norm", r.mean_row_norm},
          {"min_row_norm", r.min_row_norm}};
}

nlohmann::json to_json(const GramReport& r) {
  return {{"functions", r.gram.rows()},
          {"boundary_truncated", r.boundary_truncated},
          {"max_offdiag_interior", r.max_offdiag_interior},
          {"min_diag_interior", r.min_diag_interior},
          {"max_diag_interior", r.max_diag_interior},
          {"max_offdiag_all", r.max_offdiag_all}};
}

}  // namespace pelab::diagnostics
