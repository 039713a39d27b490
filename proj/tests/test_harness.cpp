#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "pelab/csv.hpp"
#include "pelab/errors.hpp"
#include "pelab/harness.hpp"
#include "pelab/model.hpp"
#include "pelab/scheme_json.hpp"

using namespace pelab;
using encodings::Scheme;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("pelab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string config_field(const json& j) {
  try {
    harness::parse_config(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PELAB_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

harness::ExperimentConfig tiny_config() {
  auto cfg = harness::parse_config(json::parse(R"({
    "task": {"n_train_samples": 32, "seq_len": 8},
    "model": {"d_model": 8, "d_ff": 16},
    "scheme": {"name": "sinusoidal", "clip_k": 3},
    "train": {"epochs": 1, "batch_size": 16, "seeds": [1]},
    "eval": {"lengths": [8, 12], "n_samples": 10}
  })"));
  return cfg;
}

}  // namespace

TEST_CASE("format_real round-trips doubles exactly") {
  numkit::SplitMix64 rng(3);
  for (int i = 0; i < 2000; ++i) {
    const double v = rng.normal() * std::pow(10.0, static_cast<int>(rng.below(40)) - 20);
    CHECK(std::strtod(csv::format_real(v).c_str(), nullptr) == v);
  }
  CHECK(std::strtod(csv::format_real(0.1).c_str(), nullptr) == 0.1);
  const double tiny = std::numeric_limits<double>::denorm_min();
  CHECK(std::strtod(csv::format_real(tiny).c_str(), nullptr) == tiny);
}

TEST_CASE("csv writer and reader agree") {
  const auto dir = scratch("csv");
  const auto path = (dir / "t.csv").string();
  csv::Writer w(path, {"name", "n", "x"});
  w.row("a", 3, 1.0 / 3.0);
  w.row(std::string("b"), std::size_t{7}, -2.5e-300);
  w.row_values("c", {1.0, 2.0});
  w.close();
  const auto t = csv::read(path);
  CHECK(t.rows.size() == 3);
  CHECK(t.column("x") == 2);
  CHECK(t.real(0, 2) == 1.0 / 3.0);
  CHECK(t.real(1, 2) == -2.5e-300);
  CHECK(t.rows[1][0] == "b");
  CHECK_THROWS_AS(csv::read((dir / "missing.csv").string()), IoError);
  CHECK_THROWS_AS(csv::Writer((dir / "no" / "such" / "dir.csv").string(), {"a"}), IoError);
}

TEST_CASE("default config follows the paper setup") {
  const auto cfg = harness::parse_config(json::object());
  CHECK(cfg.n_train_samples == 10000);
  CHECK(cfg.seq_len == 50);
  CHECK(cfg.epochs == 20);
  CHECK(cfg.lr == 1e-3);
  CHECK(cfg.batch_size == 32);
  CHECK(cfg.model.d_model == 64);
  CHECK(cfg.scheme.n_max == 50);
  CHECK(cfg.n_eval_samples == 1000);
  CHECK(cfg.eval_lengths == std::vector<std::size_t>{50, 100, 200});
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(cfg.table_schemes.size() == 4);
}

TEST_CASE("quick profile and explicit keys") {
  auto cfg = harness::parse_config(json::parse(R"({"train": {"profile": "quick", "epochs": 7}})"));
  CHECK(cfg.profile == harness::Profile::quick);
  CHECK(cfg.n_train_samples == 2000);
  CHECK(cfg.n_eval_samples == 200);
  CHECK(cfg.epochs == 7);

  cfg = harness::parse_config(json::parse(R"({"task": {"seq_len": 30}, "scheme": {"name": "alibi", "alpha": 0.5}})"));
  CHECK(cfg.scheme.n_max == 30);
  CHECK(cfg.scheme.scheme == Scheme::alibi);
  CHECK(cfg.scheme.alibi_slope() == 0.5);

  cfg = harness::parse_config(json::parse(R"({"scheme": {"d_model": 16}})"));
  CHECK(cfg.model.d_model == 16);
  CHECK(cfg.scheme.d_model == 16);
}

TEST_CASE("config errors name the offending key") {
  CHECK(config_field(json::parse(R"({"task": {"seq_len": -1}})")) == "task.seq_len");
  CHECK(config_field(json::parse(R"({"task": {"sequence": 5}})")) == "task.sequence");
  CHECK(config_field(json::parse(R"({"train": {"lr": 0}})")) == "train.lr");
  CHECK(config_field(json::parse(R"({"train": {"lr": "fast"}})")) == "train.lr");
  CHECK(config_field(json::parse(R"({"train": {"profile": "huge"}})")) == "train.profile");
  CHECK(config_field(json::parse(R"({"scheme": {"name": "rope"}})")) == "scheme.name");
  CHECK(config_field(json::parse(R"({"scheme": {"gamma": -2}})")) == "scheme.gamma");
  CHECK(config_field(json::parse(R"({"model": {"d_model": 8}, "scheme": {"d_model": 16}})")) == "scheme.d_model");
  CHECK(config_field(json::parse(R"({"optimizer": {}})")) == "optimizer");
  CHECK(config_field(json::parse(R"([1, 2])")) == "config");
}

TEST_CASE("config survives a to_json round trip") {
  auto cfg = tiny_config();
  cfg.scheme.gamma = 2.5;
  const auto again = harness::parse_config(harness::to_json(cfg));
  CHECK(harness::to_json(again) == harness::to_json(cfg));
}

TEST_CASE("scheme config json round trip") {
  encodings::SchemeConfig sc;
  sc.scheme = Scheme::wavelet;
  sc.wavelet_max_scale = 4;
  sc.refinement_levels = 8;
  const auto back = encodings::scheme_from_json(encodings::to_json(sc), {}, "scheme");
  CHECK(back.scheme == Scheme::wavelet);
  CHECK(back.max_scale() == 4);
  CHECK(back.refinement_levels == 8);
}

TEST_CASE("encode writes a full-precision matrix") {
  const auto dir = scratch("encode");
  auto cfg = tiny_config();
  cfg.scheme.scheme = Scheme::legendre;
  const auto path = harness::cmd_encode(cfg, 20, dir.string());
  CHECK(fs::path(path).filename() == "encoding_legendre_n20.csv");
  const auto t = csv::read(path);
  REQUIRE(t.rows.size() == 20);
  const auto pe = encodings::legendre_pe(20, cfg.scheme);
  for (std::size_t r = 0; r < 20; ++r)
    for (std::size_t c = 0; c < 8; ++c) CHECK(t.real(r, c + 1) == pe.values(r, c));

  cfg.scheme.scheme = Scheme::alibi;
  const auto bias = csv::read(harness::cmd_encode(cfg, 5, dir.string()));
  CHECK(bias.header == std::vector<std::string>{"i", "j", "bias"});
  CHECK(bias.rows.size() == 25);
}

TEST_CASE("checkpoint round trip restores every tensor bit for bit") {
  const auto dir = scratch("ckpt");
  for (Scheme s : {Scheme::learned, Scheme::relative, Scheme::wavelet}) {
    encodings::SchemeConfig sc;
    sc.scheme = s;
    sc.d_model = 8;
    sc.n_max = 8;
    sc.clip_k = 3;
    const model::Checkpoint ck{sc, model::init_params({8, 16, true}, sc, 11)};
    const auto manifest = (dir / (std::string(encodings::to_string(s)) + ".json")).string();
    model::save_checkpoint(ck, manifest);
    CHECK(fs::exists(dir / (std::string(encodings::to_string(s)) + ".bin")));
    const auto back = model::load_checkpoint(manifest);
    CHECK(back.params == ck.params);
    CHECK(back.scheme.scheme == s);
    CHECK(back.params.dims.causal);
  }
}

TEST_CASE("corrupt checkpoints raise load errors") {
  const auto dir = scratch("ckpt_bad");
  encodings::SchemeConfig sc;
  sc.d_model = 8;
  const model::Checkpoint ck{sc, model::init_params({8, 16, false}, sc, 1)};
  const auto manifest = (dir / "c.json").string();
  model::save_checkpoint(ck, manifest);
  fs::resize_file(dir / "c.bin", 100);
  CHECK_THROWS_AS(model::load_checkpoint(manifest), LoadError);
  std::ofstream(manifest) << "{ not json";
  CHECK_THROWS_AS(model::load_checkpoint(manifest), LoadError);
  CHECK_THROWS_AS(model::load_checkpoint((dir / "absent.json").string()), IoError);
}

TEST_CASE("train then eval through the harness") {
  const auto dir = scratch("train");
  const auto cfg = tiny_config();
  const auto out = harness::cmd_train(cfg, dir.string());
  CHECK(out.epoch_losses.size() == 1);
  const auto log = csv::read(out.log);
  CHECK(log.real(0, 1) == out.epoch_losses[0]);
  const double a = harness::cmd_eval(out.checkpoint, 12, 10, 5);
  const double b = harness::cmd_eval(out.checkpoint, 12, 10, 5);
  CHECK(std::isfinite(a));
  CHECK(a == b);
}

TEST_CASE("table checks count seeds") {
  harness::ExperimentReport rep;
  auto add = [&](std::uint64_t seed, Scheme s, double m50, double m200) {
    rep.cells.push_back({seed, s, 50, m50, true, ""});
    rep.cells.push_back({seed, s, 200, m200, true, ""});
  };
  for (std::uint64_t seed : {1, 2, 3}) {
    add(seed, Scheme::sinusoidal, 0.002, seed == 3 ? 0.005 : 0.04);
    add(seed, Scheme::alibi, 0.002, 0.013);
    add(seed, Scheme::wavelet, 0.002, 0.011);
    add(seed, Scheme::legendre, seed == 1 ? 0.02 : 0.002, 0.03);
  }
  const auto checks = harness::table_checks(rep, 1.0, true);
  REQUIRE(checks.size() == 4);
  CHECK(checks[0].seeds_passed == 2);
  CHECK(checks[0].passed);
  CHECK(checks[1].seeds_passed == 2);
  CHECK(checks[2].seeds_passed == 2);
  CHECK(checks[3].seeds_passed == 3);
  CHECK(harness::table_checks(rep, 2.0, false).size() == 3);

  rep.cells[0].ok = false;
  CHECK_FALSE(rep.complete());
  CHECK_FALSE(rep.mse(1, Scheme::sinusoidal, 50).has_value());
}

TEST_CASE("reproduce-table writes the labelled grid") {
  const auto dir = scratch("table");
  const auto cfg = tiny_config();
  const auto rep = harness::cmd_reproduce_table(cfg, dir.string(), false);
  CHECK(rep.complete());
  CHECK(rep.cells.size() == 4 * 2);
  const auto t = csv::read((dir / "table.csv").string());
  CHECK(t.header == std::vector<std::string>{"encoding", "MSE_N=8", "MSE_N=12"});
  std::vector<std::string> labels;
  for (const auto& r : t.rows) labels.push_back(r[0]);
  CHECK(labels == std::vector<std::string>{"Sinusoidal", "ALiBi", "Wavelet", "Legendre"});
  std::ifstream in(dir / "report.json");
  const auto j = json::parse(in);
  CHECK(j["table"]["rows"].size() == 4);
  CHECK(j["complete"] == true);

  auto bad = cfg;
  bad.table_schemes = {Scheme::learned};
  CHECK_THROWS_AS(harness::cmd_reproduce_table(bad, dir.string(), false), ConfigError);
}

TEST_CASE("cli exit codes") {
  const auto dir = scratch("cli");
  const auto good = (dir / "good.json").string();
  std::ofstream(good) << harness::to_json(tiny_config()).dump();
  const auto bad = (dir / "bad.json").string();
  std::ofstream(bad) << R"({"train": {"lr": -1}})";
  const auto broken = (dir / "broken.json").string();
  std::ofstream(broken) << "{";

  CHECK(run_cli("encode --n 10 --config " + good + " --out " + dir.string()) == 0);
  CHECK(fs::exists(dir / "encoding_sinusoidal_n10.csv"));
  CHECK(run_cli("encode --n 10 --config " + bad + " --out " + dir.string()) == 2);
  CHECK(run_cli("encode --n 10 --config " + broken + " --out " + dir.string()) == 2);
  CHECK(run_cli("encode --n 10 --config " + (dir / "nope.json").string()) == 3);
  CHECK(run_cli("encode --n 10 --profile enormous") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("encode --n 10 --config " + good + " --out /proc/pelab_cannot_write") == 3);
  CHECK(run_cli("eval --checkpoint " + (dir / "missing.json").string() + " --length 5") == 3);

  const auto corrupt = (dir / "corrupt.json").string();
  std::ofstream(corrupt) << R"({"format": "something-else"})";
  CHECK(run_cli("eval --checkpoint " + corrupt + " --length 5") == 5);

  CHECK(run_cli("train --config " + good + " --out " + (dir / "run").string()) == 0);
  CHECK(run_cli("eval --checkpoint " + (dir / "run" / "checkpoint.json").string() + " --length 9 --samples 4") == 0);

  const auto hot = (dir / "hot.json").string();
  auto hot_cfg = harness::to_json(tiny_config());
  hot_cfg["train"]["lr"] = 1e300;
  std::ofstream(hot) << hot_cfg.dump();
  CHECK(run_cli("train --config " + hot + " --out " + (dir / "hot").string()) == 4);
}
