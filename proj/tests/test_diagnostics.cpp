#include <doctest.h>

#include <cmath>

#include "pelab/diagnostics.hpp"
#include "pelab/errors.hpp"

using namespace pelab;
using namespace pelab::diagnostics;
using encodings::Scheme;

namespace {

SchemeConfig paper_scheme(Scheme s) {
  SchemeConfig cfg;
  cfg.scheme = s;
  return cfg;
}

}  // namespace

TEST_CASE("learned curve is identically zero") {
  const auto curve = extrapolation_curve(paper_scheme(Scheme::learned), 400);
  REQUIRE(curve.points.size() == 350);
  for (const auto& p : curve.points) CHECK(p.distance == 0.0);
  CHECK(fit_decay_rate(curve).degenerate);
}

TEST_CASE("curve positions are increasing past the trained range") {
  for (Scheme s : {Scheme::sinusoidal, Scheme::wavelet, Scheme::legendre}) {
    const auto c = extrapolation_curve(paper_scheme(s), 200);
    std::size_t prev = 49;
    for (const auto& p : c.points) {
      CHECK(p.pos > prev);
      CHECK(p.distance >= 0.0);
      prev = p.pos;
    }
    CHECK(c.at_offset(1) == c.points.front().distance);
  }
  CHECK_THROWS_AS(extrapolation_curve(paper_scheme(Scheme::alibi), 200), UnsupportedScheme);
  CHECK_THROWS_AS(extrapolation_curve(paper_scheme(Scheme::relative), 200), UnsupportedScheme);
}

TEST_CASE("wavelet decays and sits below sinusoidal ten steps out") {
  const auto wav = extrapolation_curve(paper_scheme(Scheme::wavelet), 400);
  const auto sin = extrapolation_curve(paper_scheme(Scheme::sinusoidal), 400);
  CHECK(wav.at_offset(10) < sin.at_offset(10));
  const auto fit = fit_decay_rate(wav);
  CHECK(fit.rate > 0.0);
  CHECK(fit.residual >= 0.0);
}

TEST_CASE("decay fit recovers a synthetic exponential") {
  DecayCurve c{"synthetic", 10, {}};
  for (std::size_t pos = 10; pos < 60; ++pos)
    c.points.push_back({pos, 3.0 * std::exp(-0.2 * static_cast<double>(pos - 10))});
  const auto fit = fit_decay_rate(c);
  CHECK(fit.rate == doctest::Approx(0.2).epsilon(1e-10));
  CHECK(fit.slope == doctest::Approx(-0.2).epsilon(1e-10));
  CHECK(fit.amplitude == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(fit.residual < 1e-10);
  DecayCurve tiny{"tiny", 10, {{10, 1.0}, {11, 0.5}}};
  CHECK_THROWS_AS(fit_decay_rate(tiny), UsageError);
}

TEST_CASE("probe weight matches a direct softmax") {
  for (double mu : {-5.0, 0.0, 3.0})
    for (double b : {-2.0, 0.0}) {
      const double direct = std::exp(mu + b) / (std::exp(mu + b) + 9.0);
      CHECK(probe_weight(mu, b, 9) == doctest::Approx(direct).epsilon(1e-14));
    }
  CHECK(probe_weight(800.0, 0.0, 10) == 1.0);
  CHECK(probe_weight(-800.0, 0.0, 10) == 0.0);
}

TEST_CASE("alibi attention gap stays under the linear bound") {
  for (double alpha : {0.002, 0.02, 0.2})
    for (double mu : {-5.0, -1.0, 0.0, 1.0, 5.0}) {
      const auto rep = alibi_weight_gap(mu, alpha, 50, 200);
      CHECK(rep.rows.front().distance == 50);
      CHECK(rep.rows.back().distance == 200);
      CHECK(rep.rows.front().measured_gap == 0.0);
      for (const auto& r : rep.rows) {
        CHECK(r.measured_gap >= 0.0);
        CHECK(r.bound >= 0.0);
      }
      CHECK(rep.bound_holds());
    }
  CHECK_THROWS_AS(alibi_weight_gap(0.0, 0.1, 50, 50), UsageError);
}

TEST_CASE("norm ceilings") {
  const auto sin = encodings::sinusoidal_pe(400, 64);
  const auto r = norm_report(sin);
  CHECK(r.max_row_norm <= 8.0 + 1e-9);
  CHECK(r.min_row_norm == doctest::Approx(8.0 / std::sqrt(2.0)));
  auto leg_cfg = paper_scheme(Scheme::legendre);
  CHECK(norm_report(encodings::legendre_pe(400, leg_cfg)).max_row_norm <= 8.0 + 1e-9);
}

TEST_CASE("gram matrix of the kept wavelet basis") {
  const auto cfg = paper_scheme(Scheme::wavelet);
  const auto tables = encodings::daubechies4_tables(10);
  const auto basis = encodings::select_wavelet_basis(cfg.n_max, cfg.max_scale(), cfg.d_model);
  const auto g = gram_report(basis, tables, cfg.n_max);
  CHECK(g.gram.rows() == 64);
  CHECK(g.max_offdiag_interior < 0.05);
  CHECK(g.min_diag_interior >= 0.9);
  CHECK(g.max_diag_interior <= 1.1);
  CHECK_FALSE(g.boundary_truncated.empty());
  for (std::size_t a = 0; a < basis.size(); ++a)
    for (std::size_t b = 0; b < basis.size(); ++b) {
      CHECK(g.gram(a, b) == g.gram(b, a));
      const bool disjoint = basis[a].support_end() <= basis[b].support_begin() ||
                            basis[b].support_end() <= basis[a].support_begin();
      if (disjoint) CHECK(g.gram(a, b) == 0.0);
    }
}

TEST_CASE("same-scale interior neighbours are nearly orthogonal") {
  const auto tables = encodings::daubechies4_tables(10);
  using encodings::BasisKind;
  std::vector<encodings::WaveletBasisFunction> pair{{BasisKind::wavelet, 1, 5, 6.0},
                                                    {BasisKind::wavelet, 1, 6, 6.0}};
  const auto g = gram_report(pair, tables, 50);
  CHECK(std::abs(g.gram(0, 1)) < 0.05);
  CHECK(g.gram(0, 0) == doctest::Approx(1.0).epsilon(0.1));
}
