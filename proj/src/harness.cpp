#include "pelab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "pelab/csv.hpp"
#include "pelab/errors.hpp"
#include "pelab/json_fields.hpp"
#include "pelab/scheme_json.hpp"
#include "pelab/tasks.hpp"

namespace pelab::harness {

namespace fs = std::filesystem;
using json_fields::get_bool;
using json_fields::get_count;
using json_fields::get_real;
using nlohmann::json;

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir + "'");
}

std::string join(const std::string& dir, const std::string& file) {
  return (fs::path(dir) / file).string();
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  out.close();
  if (!out) throw IoError("write failed for '" + path + "'");
}

template <typename T, typename Fn>
std::vector<T> get_list(const json& v, const std::string& field, Fn&& item) {
  if (!v.is_array() || v.empty()) throw ConfigError(field, "must be a non-empty array");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(item(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

void require_object(const json& j, const std::string& field) {
  if (!j.is_object()) throw ConfigError(field, "must be a JSON object");
}

}  // namespace

Profile parse_profile(std::string_view name, const std::string& field) {
  if (name == "paper") return Profile::paper;
  if (name == "quick") return Profile::quick;
  throw ConfigError(field, "unknown profile '" + std::string(name) + "' (expected paper or quick)");
}

std::string_view to_string(Profile p) noexcept { return p == Profile::paper ? "paper" : "quick"; }

void apply_profile(ExperimentConfig& cfg, Profile p) {
  cfg.profile = p;
  if (p == Profile::paper) {
    cfg.n_train_samples = 10000;
    cfg.epochs = 20;
    cfg.n_eval_samples = 1000;
  } else {
    cfg.n_train_samples = 2000;
    cfg.epochs = 5;
    cfg.n_eval_samples = 200;
  }
}

model::TrainConfig ExperimentConfig::train_config(Scheme s, std::uint64_t run_seed) const {
  model::TrainConfig tc;
  tc.n_train_samples = n_train_samples;
  tc.seq_len = seq_len;
  tc.epochs = epochs;
  tc.lr = lr;
  tc.batch_size = batch_size;
  tc.seed = run_seed;
  tc.scheme = scheme;
  tc.scheme.scheme = s;
  tc.model = model;
  return tc;
}

void ExperimentConfig::validate() const {
  if (n_train_samples < 1) throw ConfigError("task.n_train_samples", "must be at least 1");
  if (seq_len < 1) throw ConfigError("task.seq_len", "must be at least 1");
  if (model.d_ff < 1) throw ConfigError("model.d_ff", "must be at least 1");
  if (model.d_model != scheme.d_model)
    throw ConfigError("scheme.d_model", "differs from model.d_model");
  if (epochs < 1) throw ConfigError("train.epochs", "must be at least 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr", "must be positive");
  if (batch_size < 1) throw ConfigError("train.batch_size", "must be at least 1");
  if (seeds.empty()) throw ConfigError("train.seeds", "must not be empty");
  if (eval_lengths.empty()) throw ConfigError("eval.lengths", "must not be empty");
  for (std::size_t n : eval_lengths)
    if (n < 1) throw ConfigError("eval.lengths", "lengths must be at least 1");
  if (n_eval_samples < 1) throw ConfigError("eval.n_samples", "must be at least 1");
  scheme.validate();
}

ExperimentConfig parse_config(const json& j) {
  require_object(j, "config");
  static const std::set<std::string> sections{"task", "model", "scheme", "train", "eval"};
  for (const auto& [key, value] : j.items()) {
    if (!sections.contains(key)) throw ConfigError(key, "unknown section");
    require_object(value, key);
  }

  ExperimentConfig cfg;
  if (j.contains("train") && j["train"].contains("profile")) {
    const auto& p = j["train"]["profile"];
    if (!p.is_string()) throw ConfigError("train.profile", "must be a string");
    apply_profile(cfg, parse_profile(p.get<std::string>()));
  }

  if (j.contains("task")) {
    for (const auto& [key, v] : j["task"].items()) {
      const std::string f = "task." + key;
      if (key == "n_train_samples") cfg.n_train_samples = get_count(v, f);
      else if (key == "seq_len") cfg.seq_len = get_count(v, f);
      else throw ConfigError(f, "unknown key");
    }
  }

  std::optional<std::size_t> model_d;
  if (j.contains("model")) {
    for (const auto& [key, v] : j["model"].items()) {
      const std::string f = "model." + key;
      if (key == "d_model") model_d = get_count(v, f);
      else if (key == "d_ff") cfg.model.d_ff = get_count(v, f);
      else if (key == "causal") cfg.model.causal = get_bool(v, f);
      else throw ConfigError(f, "unknown key");
    }
  }

  encodings::SchemeConfig base;
  base.n_max = cfg.seq_len;
  if (j.contains("scheme")) {
    const auto& s = j["scheme"];
    base = encodings::scheme_from_json(s, base);
    if (s.contains("schemes")) {
      cfg.table_schemes = get_list<Scheme>(s["schemes"], "scheme.schemes",
                                           [](const json& v, const std::string& f) {
                                             if (!v.is_string()) throw ConfigError(f, "must be a string");
                                             return encodings::parse_scheme(v.get<std::string>(), f);
                                           });
    }
    if (s.contains("d_model") && model_d && *model_d != base.d_model)
      throw ConfigError("scheme.d_model", "differs from model.d_model");
    if (!model_d && s.contains("d_model")) model_d = base.d_model;
  }
  cfg.model.d_model = model_d.value_or(64);
  base.d_model = cfg.model.d_model;
  cfg.scheme = base;

  if (j.contains("train")) {
    for (const auto& [key, v] : j["train"].items()) {
      const std::string f = "train." + key;
      if (key == "profile") continue;
      if (key == "epochs") cfg.epochs = get_count(v, f);
      else if (key == "lr") cfg.lr = get_real(v, f);
      else if (key == "batch_size") cfg.batch_size = get_count(v, f);
      else if (key == "seed") cfg.seed = get_count(v, f);
      else if (key == "seeds")
        cfg.seeds = get_list<std::uint64_t>(v, f, [](const json& e, const std::string& ef) {
          return static_cast<std::uint64_t>(get_count(e, ef));
        });
      else throw ConfigError(f, "unknown key");
    }
  }

  if (j.contains("eval")) {
    for (const auto& [key, v] : j["eval"].items()) {
      const std::string f = "eval." + key;
      if (key == "lengths")
        cfg.eval_lengths = get_list<std::size_t>(v, f, [](const json& e, const std::string& ef) {
          return get_count(e, ef);
        });
      else if (key == "n_samples") cfg.n_eval_samples = get_count(v, f);
      else throw ConfigError(f, "unknown key");
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config", "not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& cfg) {
  json schemes = json::array();
  for (Scheme s : cfg.table_schemes) schemes.push_back(std::string(encodings::to_string(s)));
  json sc = encodings::to_json(cfg.scheme);
  sc["schemes"] = schemes;
  return {{"task", {{"n_train_samples", cfg.n_train_samples}, {"seq_len", cfg.seq_len}}},
          {"model",
           {{"d_model", cfg.model.d_model}, {"d_ff", cfg.model.d_ff}, {"causal", cfg.model.causal}}},
          {"scheme", sc},
          {"train",
           {{"profile", std::string(to_string(cfg.profile))},
            {"epochs", cfg.epochs},
            {"lr", cfg.lr},
            {"batch_size", cfg.batch_size},
            {"seed", cfg.seed},
            {"seeds", cfg.seeds}}},
          {"eval", {{"lengths", cfg.eval_lengths}, {"n_samples", cfg.n_eval_samples}}}};
}

std::uint64_t eval_seed(std::uint64_t seed, std::size_t length_index) noexcept {
  return seed + 1 + length_index;
}

std::string cmd_encode(const ExperimentConfig& cfg, std::size_t n, const std::string& out_dir) {
  cfg.scheme.validate();
  if (n < 1) throw ConfigError("n", "must be at least 1");
  ensure_dir(out_dir);
  const auto& sc = cfg.scheme;
  encodings::Encoding enc;
  if (sc.scheme == Scheme::learned) {
    const auto t = encodings::init_learned_table(sc.n_max, sc.d_model, cfg.seed);
    enc = encodings::encode(sc, n, {&t, nullptr});
  } else if (sc.scheme == Scheme::relative) {
    const auto t = encodings::init_relative_table(sc.clip_k, cfg.seed);
    enc = encodings::encode(sc, n, {nullptr, &t});
  } else {
    enc = encodings::encode(sc, n);
  }
  const std::string path = join(out_dir, "encoding_" + std::string(encodings::to_string(sc.scheme)) +
                                             "_n" + std::to_string(n) + ".csv");
  if (enc.pe) {
    std::vector<std::string> header{"pos"};
    for (std::size_t c = 0; c < enc.pe->dim(); ++c) header.push_back("dim_" + std::to_string(c));
    csv::Writer w(path, header);
    for (std::size_t pos = 0; pos < n; ++pos) {
      const auto row = enc.pe->values.row(pos);
      w.row_values(std::to_string(pos), std::vector<double>(row.begin(), row.end()));
    }
    w.close();
  } else if (enc.bias) {
    csv::Writer w(path, {"i", "j", "bias"});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) w.row(i, j, enc.bias->values(i, j));
    w.close();
  } else {
    throw ConfigError("scheme.name", "scheme 'none' has no encoding to write");
  }
  return path;
}

TrainOutputs cmd_train(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  const auto tc = cfg.train_config(cfg.scheme.scheme, cfg.seed);
  const auto data = tasks::gen_running_sum(cfg.n_train_samples, cfg.seq_len, cfg.seed);
  auto res = model::train(tc, data);

  TrainOutputs out;
  out.checkpoint = join(out_dir, "checkpoint.json");
  out.log = join(out_dir, "train_log.csv");
  out.epoch_losses = res.epoch_losses;
  model::save_checkpoint({tc.scheme, std::move(res.params)}, out.checkpoint);
  csv::Writer w(out.log, {"epoch", "loss"});
  for (std::size_t e = 0; e < out.epoch_losses.size(); ++e) w.row(e + 1, out.epoch_losses[e]);
  w.close();
  return out;
}

double cmd_eval(const std::string& checkpoint, std::size_t length, std::size_t n_samples,
                std::uint64_t seed) {
  if (length < 1) throw ConfigError("length", "must be at least 1");
  if (n_samples < 1) throw ConfigError("samples", "must be at least 1");
  const auto ck = model::load_checkpoint(checkpoint);
  const auto data = tasks::gen_running_sum(n_samples, length, seed);
  return model::evaluate(ck.params, ck.scheme, data);
}

json DiagnosticsSummary::to_json() const {
  json fits_j = json::object();
  for (const auto& [name, fit] : fits) fits_j[name] = diagnostics::to_json(fit);
  json norms_j = json::object();
  for (const auto& [name, n] : norms) norms_j[name] = diagnostics::to_json(n);
  json gaps = json::array();
  for (const auto& g : bias_gaps) {
    double worst = 0.0;
    for (const auto& r : g.rows) worst = std::max(worst, r.measured_gap - r.bound);
    gaps.push_back({{"mu", g.mu},
                    {"alpha", g.alpha},
                    {"n_max", g.n_max},
                    {"context_len", g.context_len},
                    {"bound_holds", g.bound_holds()},
                    {"max_gap_minus_bound", worst}});
  }
  json curves_j = json::object();
  for (const auto& c : curves) {
    json pts = json::object();
    for (std::size_t delta : {1, 10, 50, 100, 150}) {
      if (c.n_max - 1 + delta < c.n_max + c.points.size())
        pts["delta_" + std::to_string(delta)] = c.at_offset(delta);
    }
    curves_j[c.scheme] = pts;
  }
  return {{"decay_fits", fits_j},
          {"curve_samples", curves_j},
          {"norms", norms_j},
          {"bias_gap", gaps},
          {"gram", diagnostics::to_json(gram)}};
}

DiagnosticsSummary run_diagnostics(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.scheme.validate();
  DiagnosticsSummary sum;
  const std::size_t n_max = cfg.scheme.n_max;
  const std::size_t horizon = 8 * n_max;

  for (Scheme s : {Scheme::sinusoidal, Scheme::learned, Scheme::wavelet, Scheme::legendre}) {
    auto sc = cfg.scheme;
    sc.scheme = s;
    if (s == Scheme::sinusoidal && sc.d_model % 2 != 0) continue;
    auto curve = diagnostics::extrapolation_curve(sc, horizon);
    sum.fits.emplace_back(curve.scheme, diagnostics::fit_decay_rate(curve));
    sum.curves.push_back(std::move(curve));

    encodings::Encoding enc;
    if (s == Scheme::learned) {
      const auto t = encodings::init_learned_table(sc.n_max, sc.d_model, 0);
      enc = encodings::encode(sc, 4 * n_max, {&t, nullptr});
    } else {
      enc = encodings::encode(sc, 4 * n_max);
    }
    sum.norms.emplace_back(std::string(encodings::to_string(s)), diagnostics::norm_report(*enc.pe));
  }

  for (double alpha : {0.002, 0.02, 0.2})
    for (double mu : {-5.0, -1.0, 0.0, 1.0, 5.0})
      sum.bias_gaps.push_back(diagnostics::alibi_weight_gap(mu, alpha, n_max, 4 * n_max));

  const int levels = std::max(cfg.scheme.refinement_levels, 10);
  const auto tables = encodings::daubechies4_tables(levels);
  const auto basis = encodings::select_wavelet_basis(n_max, cfg.scheme.max_scale(), cfg.scheme.d_model);
  sum.gram = diagnostics::gram_report(basis, tables, n_max);

  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    diagnostics::write_curve_csv(sum.curves, join(out_dir, "decay_curves.csv"));
    diagnostics::write_bias_gap_csv(sum.bias_gaps, join(out_dir, "bias_gap.csv"));
    diagnostics::write_gram_csv(sum.gram, join(out_dir, "gram.csv"));
    csv::Writer w(join(out_dir, "norms.csv"), {"scheme", "max_row_norm", "mean_row_norm", "min_row_norm"});
    for (const auto& [name, n] : sum.norms) w.row(name, n.max_row_norm, n.mean_row_norm, n.min_row_norm);
    w.close();
    write_json(sum.to_json(), join(out_dir, "diagnostics.json"));
  }
  return sum;
}

bool ExperimentReport::complete() const noexcept {
  return std::all_of(cells.begin(), cells.end(), [](const Cell& c) { return c.ok; });
}

std::optional<double> ExperimentReport::mse(std::uint64_t seed, Scheme s, std::size_t length) const {
  for (const auto& c : cells)
    if (c.seed == seed && c.scheme == s && c.length == length && c.ok) return c.mse;
  return std::nullopt;
}

std::string table_label(Scheme s) {
  switch (s) {
    case Scheme::sinusoidal: return "Sinusoidal";
    case Scheme::alibi: return "ALiBi";
    case Scheme::wavelet: return "Wavelet";
    case Scheme::legendre: return "Legendre";
    case Scheme::learned: return "Learned";
    case Scheme::relative: return "Relative";
    case Scheme::none: return "None";
  }
  return "None";
}

namespace {

std::string column_label(std::size_t n) { return "MSE_N=" + std::to_string(n); }

struct Grid {
  std::vector<std::uint64_t> seeds;
  std::vector<Scheme> schemes;
  std::vector<std::size_t> lengths;
};

Grid grid_of(const ExperimentReport& r) {
  Grid g;
  for (const auto& c : r.cells) {
    if (std::find(g.seeds.begin(), g.seeds.end(), c.seed) == g.seeds.end()) g.seeds.push_back(c.seed);
    if (std::find(g.schemes.begin(), g.schemes.end(), c.scheme) == g.schemes.end())
      g.schemes.push_back(c.scheme);
    if (std::find(g.lengths.begin(), g.lengths.end(), c.length) == g.lengths.end())
      g.lengths.push_back(c.length);
  }
  return g;
}

std::optional<double> mean_mse(const ExperimentReport& r, Scheme s, std::size_t n,
                               const std::vector<std::uint64_t>& seeds) {
  double total = 0.0;
  std::size_t count = 0;
  for (auto seed : seeds) {
    if (auto v = r.mse(seed, s, n)) {
      total += *v;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return total / static_cast<double>(count);
}

}  // namespace

json ExperimentReport::to_json() const {
  const Grid g = grid_of(*this);
  json cells_j = json::array();
  for (const auto& c : cells) {
    json e{{"seed", c.seed},
           {"scheme", std::string(encodings::to_string(c.scheme))},
           {"length", c.length},
           {"status", c.ok ? "ok" : "failed"}};
    e["mse"] = c.ok ? json(c.mse) : json(nullptr);
    if (!c.ok) e["error"] = c.error;
    cells_j.push_back(e);
  }
  json columns = json::array();
  for (auto n : g.lengths) columns.push_back(column_label(n));
  json rows = json::array();
  for (Scheme s : g.schemes) {
    json values = json::array();
    for (auto n : g.lengths) {
      auto m = mean_mse(*this, s, n, g.seeds);
      values.push_back(m ? json(*m) : json(nullptr));
    }
    rows.push_back({{"encoding", table_label(s)}, {"values", values}});
  }
  json runs_j = json::array();
  for (const auto& r : runs)
    runs_j.push_back({{"seed", r.seed},
                      {"scheme", std::string(encodings::to_string(r.scheme))},
                      {"epoch_losses", r.epoch_losses}});
  return {{"format", "pelab-report"},
          {"version", 1},
          {"config", config},
          {"seeds", g.seeds},
          {"lengths", g.lengths},
          {"cells", cells_j},
          {"table", {{"columns", columns}, {"rows", rows}}},
          {"runs", runs_j},
          {"complete", complete()},
          {"wall_clock_seconds", wall_clock_seconds}};
}

ExperimentReport cmd_reproduce_table(const ExperimentConfig& cfg, const std::string& out_dir,
                                     bool with_diagnostics) {
  cfg.validate();
  for (Scheme s : cfg.table_schemes) {
    if (s != Scheme::sinusoidal && s != Scheme::alibi && s != Scheme::wavelet &&
        s != Scheme::legendre) {
      throw ConfigError("scheme.schemes", "table reproduction covers sinusoidal, alibi, wavelet "
                                          "and legendre; got '" +
                                              std::string(encodings::to_string(s)) + "'");
    }
  }
  ensure_dir(out_dir);
  const auto started = std::chrono::steady_clock::now();

  ExperimentReport rep;
  rep.config = to_json(cfg);
  for (auto seed : cfg.seeds) {
    const auto train_data = tasks::gen_running_sum(cfg.n_train_samples, cfg.seq_len, seed);
    std::vector<tasks::Dataset> eval_sets;
    for (std::size_t i = 0; i < cfg.eval_lengths.size(); ++i)
      eval_sets.push_back(
          tasks::gen_running_sum(cfg.n_eval_samples, cfg.eval_lengths[i], eval_seed(seed, i)));

    for (Scheme s : cfg.table_schemes) {
      const auto tc = cfg.train_config(s, seed);
      std::optional<model::TrainResult> trained;
      std::string error;
      try {
        trained = model::train(tc, train_data);
        rep.runs.push_back({seed, s, trained->epoch_losses});
      } catch (const Error& e) {
        error = e.what();
      }
      for (std::size_t i = 0; i < cfg.eval_lengths.size(); ++i) {
        Cell c{seed, s, cfg.eval_lengths[i], 0.0, false, error};
        if (trained) {
          try {
            c.mse = model::evaluate(trained->params, tc.scheme, eval_sets[i]);
            c.ok = std::isfinite(c.mse);
            if (!c.ok) c.error = "non-finite test MSE";
          } catch (const Error& e) {
            c.error = e.what();
          }
        }
        rep.cells.push_back(std::move(c));
      }
    }
  }
  rep.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  {
    std::vector<std::string> header{"encoding"};
    for (auto n : cfg.eval_lengths) header.push_back(column_label(n));
    csv::Writer w(join(out_dir, "table.csv"), header);
    for (Scheme s : cfg.table_schemes) {
      std::string line = table_label(s);
      for (auto n : cfg.eval_lengths) {
        auto m = mean_mse(rep, s, n, cfg.seeds);
        line += "," + (m ? csv::format_real(*m) : std::string("failed"));
      }
      w.row(std::string_view(line));
    }
    w.close();
  }
  {
    csv::Writer w(join(out_dir, "cells.csv"), {"seed", "scheme", "length", "mse", "status"});
    for (const auto& c : rep.cells)
      w.row(c.seed, encodings::to_string(c.scheme), c.length,
            c.ok ? csv::format_real(c.mse) : std::string("nan"), c.ok ? "ok" : "failed");
    w.close();
  }
  {
    csv::Writer w(join(out_dir, "train_losses.csv"), {"seed", "scheme", "epoch", "loss"});
    for (const auto& r : rep.runs)
      for (std::size_t e = 0; e < r.epoch_losses.size(); ++e)
        w.row(r.seed, encodings::to_string(r.scheme), e + 1, r.epoch_losses[e]);
    w.close();
  }

  json j = rep.to_json();
  const double relax = cfg.profile == Profile::quick ? 2.0 : 1.0;
  json checks = json::array();
  for (const auto& c : table_checks(rep, relax, cfg.profile == Profile::paper))
    checks.push_back({{"id", c.id},
                      {"description", c.description},
                      {"seeds_passed", c.seeds_passed},
                      {"seeds_total", c.seeds_total},
                      {"passed", c.passed}});
  j["checks"] = checks;
  if (with_diagnostics) j["diagnostics"] = run_diagnostics(cfg, join(out_dir, "diagnostics")).to_json();
  write_json(j, join(out_dir, "report.json"));
  return rep;
}

std::vector<TableCheck> table_checks(const ExperimentReport& report, double relax,
                                     bool include_wavelet_alibi) {
  const Grid g = grid_of(report);
  const std::size_t total = g.seeds.size();
  const std::size_t needed = (2 * total + 2) / 3;  // ceil(2/3 · seeds)
  const std::size_t n_train = 50, n_long = 200;

  auto count = [&](auto&& holds) {
    std::size_t k = 0;
    for (auto seed : g.seeds)
      if (holds(seed)) ++k;
    return k;
  };
  auto mse = [&](std::uint64_t seed, Scheme s, std::size_t n) { return report.mse(seed, s, n); };
  auto make = [&](std::string id, std::string desc, std::size_t passed) {
    return TableCheck{std::move(id), std::move(desc), passed, total, total > 0 && passed >= needed};
  };

  std::vector<TableCheck> out;
  const double mse_cap = 0.01 * relax;
  out.push_back(make("a", "every scheme reaches MSE < " + csv::format_real(mse_cap) + " at N=50",
                     count([&](std::uint64_t seed) {
                       return std::all_of(g.schemes.begin(), g.schemes.end(), [&](Scheme s) {
                         auto m = mse(seed, s, n_train);
                         return m && *m < mse_cap;
                       });
                     })));
  out.push_back(make("b", "MSE(wavelet) and MSE(alibi) below " + csv::format_real(relax) +
                              " x MSE(sinusoidal) at N=200",
                     count([&](std::uint64_t seed) {
                       auto sin = mse(seed, Scheme::sinusoidal, n_long);
                       auto wav = mse(seed, Scheme::wavelet, n_long);
                       auto ali = mse(seed, Scheme::alibi, n_long);
                       return sin && wav && ali && *wav < relax * *sin && *ali < relax * *sin;
                     })));
  const double ratio_floor = 5.0 / relax;
  out.push_back(make("c", "sinusoidal MSE(N=200)/MSE(N=50) >= " + csv::format_real(ratio_floor),
                     count([&](std::uint64_t seed) {
                       auto lo = mse(seed, Scheme::sinusoidal, n_train);
                       auto hi = mse(seed, Scheme::sinusoidal, n_long);
                       return lo && hi && *lo > 0.0 && *hi / *lo >= ratio_floor;
                     })));
  if (include_wavelet_alibi) {
    const double factor = 1.5 * relax;
    out.push_back(make("d", "MSE(wavelet) <= " + csv::format_real(factor) + " x MSE(alibi) at N=200",
                       count([&](std::uint64_t seed) {
                         auto wav = mse(seed, Scheme::wavelet, n_long);
                         auto ali = mse(seed, Scheme::alibi, n_long);
                         return wav && ali && *wav <= factor * *ali;
                       })));
  }
  return out;
}

}  // namespace pelab::harness
