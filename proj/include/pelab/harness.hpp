#pragma once

// Config-driven experiment harness behind the `pelab` command line tool.
//
// Config files are one JSON object with optional sections
//   { "task": {...}, "model": {...}, "scheme": {...}, "train": {...}, "eval": {...} }
// Resolution order: built-in `paper` defaults, then `train.profile` if given,
// then every explicit key in the file, then command-line overrides.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pelab/diagnostics.hpp"
#include "pelab/encodings.hpp"
#include "pelab/model.hpp"

namespace pelab::harness {

using encodings::Scheme;

enum class Profile { paper, quick };

Profile parse_profile(std::string_view name, const std::string& field = "train.profile");
std::string_view to_string(Profile p) noexcept;

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kIoError = 3,
  kDiverged = 4,
  kLoadError = 5,
  kPartialReport = 6,
};

struct ExperimentConfig {
  // task
  std::size_t n_train_samples = 10000;
  std::size_t seq_len = 50;
  // model
  model::ModelConfig model;
  // scheme
  encodings::SchemeConfig scheme;
  std::vector<Scheme> table_schemes{Scheme::sinusoidal, Scheme::alibi, Scheme::wavelet,
                                    Scheme::legendre};
  // train
  Profile profile = Profile::paper;
  std::size_t epochs = 20;
  double lr = 1e-3;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  // eval
  std::vector<std::size_t> eval_lengths{50, 100, 200};
  std::size_t n_eval_samples = 1000;

  /// Training setup for one scheme and seed.
  model::TrainConfig train_config(Scheme s, std::uint64_t run_seed) const;
  void validate() const;
};

/// Overwrites the sample counts and epochs with the profile's values.
void apply_profile(ExperimentConfig& cfg, Profile p);

ExperimentConfig parse_config(const nlohmann::json& j);
/// Throws IoError if unreadable, ConfigError (naming the key) if malformed.
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Dataset seed for evaluation length index `i` in a run seeded `seed`:
/// training uses seed, evaluation lengths use seed + 1 + i.
std::uint64_t eval_seed(std::uint64_t seed, std::size_t length_index) noexcept;

// --- commands ----------------------------------------------------------------------

/// Writes `<out_dir>/encoding_<scheme>_n<n>.csv`; returns the path.
std::string cmd_encode(const ExperimentConfig& cfg, std::size_t n, const std::string& out_dir);

struct TrainOutputs {
  std::string checkpoint;
  std::string log;
  std::vector<double> epoch_losses;
};

/// Trains cfg.scheme with cfg.seed; writes checkpoint.json/.bin and train_log.csv.
TrainOutputs cmd_train(const ExperimentConfig& cfg, const std::string& out_dir);

/// Forward-only MSE on a fresh running-sum set of the given length and seed.
double cmd_eval(const std::string& checkpoint, std::size_t length, std::size_t n_samples,
                std::uint64_t seed);

struct DiagnosticsSummary {
  std::vector<diagnostics::DecayCurve> curves;
  std::vector<std::pair<std::string, diagnostics::DecayFit>> fits;
  std::vector<diagnostics::BiasGapReport> bias_gaps;
  std::vector<std::pair<std::string, diagnostics::NormReport>> norms;
  diagnostics::GramReport gram;
  nlohmann::json to_json() const;
};

/// Computes the diagnostics bundle; writes CSV files and diagnostics.json when
/// `out_dir` is non-empty.
DiagnosticsSummary run_diagnostics(const ExperimentConfig& cfg, const std::string& out_dir);

struct Cell {
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::sinusoidal;
  std::size_t length = 0;
  double mse = 0.0;
  bool ok = false;
  std::string error;
};

struct RunLog {
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::sinusoidal;
  std::vector<double> epoch_losses;
};

struct ExperimentReport {
  std::vector<Cell> cells;
  std::vector<RunLog> runs;
  nlohmann::json config;
  double wall_clock_seconds = 0.0;

  bool complete() const noexcept;
  /// MSE for (seed, scheme, length); nullopt if missing or failed.
  std::optional<double> mse(std::uint64_t seed, Scheme s, std::size_t length) const;
  nlohmann::json to_json() const;
};

/// Display label used in the results table ("Sinusoidal", "ALiBi", ...).
std::string table_label(Scheme s);

/// Trains every (seed, scheme) at seq_len and evaluates at each length.
/// Writes table.csv (mean over seeds), cells.csv, train_losses.csv and
/// report.json; with `with_diagnostics` also the diagnostics bundle.
ExperimentReport cmd_reproduce_table(const ExperimentConfig& cfg, const std::string& out_dir,
                                     bool with_diagnostics = true);

struct TableCheck {
  std::string id;
  std::string description;
  std::size_t seeds_passed = 0;
  std::size_t seeds_total = 0;
  bool passed = false;
};

/// Ordering checks on a table report; each must hold in at least two thirds
/// of the seeds. `relax` multiplies every threshold in the lenient direction.
/// The wavelet-vs-ALiBi check is included only when `include_wavelet_alibi`.
std::vector<TableCheck> table_checks(const ExperimentReport& report, double relax,
                                     bool include_wavelet_alibi);

}  // namespace pelab::harness
