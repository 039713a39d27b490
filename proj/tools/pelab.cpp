// pelab: positional-encoding lab command line.
//
//   pelab encode          --config cfg.json --n 200 --out DIR
//   pelab train           --config cfg.json --out DIR [--profile quick] [--seed 7]
//   pelab eval            --checkpoint DIR/checkpoint.json --length 100 [--samples 1000] [--seed 3]
//   pelab diagnose        --config cfg.json --out DIR
//   pelab reproduce-table --config cfg.json --out DIR [--profile quick]

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pelab/errors.hpp"
#include "pelab/harness.hpp"

namespace {

using namespace pelab;
using harness::ExitCode;

struct Common {
  std::string config;
  std::string profile;
  std::optional<std::uint64_t> seed;
  std::string out = "pelab_out";
};

void add_common(CLI::App* cmd, Common& c, bool needs_out = true) {
  cmd->add_option("--config", c.config, "JSON config file (defaults apply when omitted)");
  cmd->add_option("--profile", c.profile, "paper | quick");
  cmd->add_option("--seed", c.seed, "override train.seed (and the replicate seed list)");
  if (needs_out) cmd->add_option("--out", c.out, "output directory");
}

harness::ExperimentConfig resolve(const Common& c) {
  harness::ExperimentConfig cfg =
      c.config.empty() ? harness::parse_config(nlohmann::json::object()) : harness::load_config(c.config);
  if (!c.profile.empty()) harness::apply_profile(cfg, harness::parse_profile(c.profile, "--profile"));
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.seeds = {*c.seed};
  }
  cfg.validate();
  return cfg;
}

int run(int argc, char** argv) {
  CLI::App app{"pelab - positional encoding laboratory"};
  app.require_subcommand(1);

  Common enc_c, train_c, diag_c, table_c;
  std::size_t enc_n = 0;
  std::string scheme_override;
  auto* enc = app.add_subcommand("encode", "write a positional encoding or bias matrix as CSV");
  add_common(enc, enc_c);
  enc->add_option("--n", enc_n, "number of positions")->required();
  enc->add_option("--scheme", scheme_override, "override scheme.name");

  auto* trn = app.add_subcommand("train", "train one scheme and write a checkpoint");
  add_common(trn, train_c);
  trn->add_option("--scheme", scheme_override, "override scheme.name");

  std::string ckpt;
  std::size_t ev_len = 0, ev_samples = 1000;
  std::uint64_t ev_seed = 2;
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on fresh data");
  ev->add_option("--checkpoint", ckpt, "checkpoint manifest (.json)")->required();
  ev->add_option("--length", ev_len, "sequence length")->required();
  ev->add_option("--samples", ev_samples, "number of test sequences");
  ev->add_option("--seed", ev_seed, "dataset seed");

  auto* diag = app.add_subcommand("diagnose", "decay curves, bias-gap bound, norms and Gram matrix");
  add_common(diag, diag_c);

  auto* table = app.add_subcommand("reproduce-table", "train the scheme grid and report test MSE");
  add_common(table, table_c);
  bool no_diag = false;
  table->add_flag("--no-diagnostics", no_diag, "skip the diagnostics bundle");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ExitCode::kOk : ExitCode::kConfigError;
  }

  auto apply_scheme = [&](harness::ExperimentConfig& cfg) {
    if (!scheme_override.empty())
      cfg.scheme.scheme = encodings::parse_scheme(scheme_override, "--scheme");
  };

  if (*enc) {
    auto cfg = resolve(enc_c);
    apply_scheme(cfg);
    std::cout << harness::cmd_encode(cfg, enc_n, enc_c.out) << '\n';
  } else if (*trn) {
    auto cfg = resolve(train_c);
    apply_scheme(cfg);
    const auto out = harness::cmd_train(cfg, train_c.out);
    std::cout << "checkpoint: " << out.checkpoint << "\nlog: " << out.log << "\nfinal loss: "
              << out.epoch_losses.back() << '\n';
  } else if (*ev) {
    const double mse = harness::cmd_eval(ckpt, ev_len, ev_samples, ev_seed);
    std::printf("%.17g\n", mse);
  } else if (*diag) {
    const auto cfg = resolve(diag_c);
    const auto sum = harness::run_diagnostics(cfg, diag_c.out);
    std::cout << sum.to_json().dump(2) << '\n';
  } else if (*table) {
    const auto cfg = resolve(table_c);
    const auto rep = harness::cmd_reproduce_table(cfg, table_c.out, !no_diag);
    for (const auto& c : rep.cells) {
      std::printf("seed=%llu %-10s N=%-4zu %s\n", static_cast<unsigned long long>(c.seed),
                  std::string(encodings::to_string(c.scheme)).c_str(), c.length,
                  c.ok ? std::to_string(c.mse).c_str() : ("FAILED: " + c.error).c_str());
    }
    std::printf("wall clock: %.1f s\n", rep.wall_clock_seconds);
    if (!rep.complete()) return ExitCode::kPartialReport;
  }
  return ExitCode::kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const pelab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return ExitCode::kConfigError;
  } catch (const pelab::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return ExitCode::kIoError;
  } catch (const pelab::TrainingDiverged& e) {
    std::cerr << e.what() << '\n';
    return ExitCode::kDiverged;
  } catch (const pelab::LoadError& e) {
    std::cerr << "load error: " << e.what() << '\n';
    return ExitCode::kLoadError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitCode::kFailure;
  }
}
