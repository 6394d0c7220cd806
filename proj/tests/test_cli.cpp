#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "pcmc/manifest.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* env = std::getenv("PCMC_CLI");
  REQUIRE_MESSAGE(env != nullptr, "PCMC_CLI must point at the pcmc binary");
  return env;
}

int run(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "pcmc_test_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("datagen writes sessions, schema, and a manifest; reruns are byte-identical") {
  const fs::path dir = work_dir();
  const std::string out_a = (dir / "a").string();
  const std::string out_b = (dir / "b").string();
  REQUIRE(run("datagen --kind context --n 50 --seed 7 --out " + out_a) == 0);
  REQUIRE(run("datagen --kind context --n 50 --seed 7 --out " + out_b) == 0);
  CHECK(slurp(dir / "a" / "sessions.jsonl") == slurp(dir / "b" / "sessions.jsonl"));
  CHECK(slurp(dir / "a" / "schema.json") == slurp(dir / "b" / "schema.json"));

  const pcmc::Manifest m = pcmc::Manifest::read(dir / "a" / "manifest.json");
  CHECK(m.command == "datagen");
  CHECK(m.seed == 7);

  // different seed differs
  const std::string out_c = (dir / "c").string();
  REQUIRE(run("datagen --kind context --n 50 --seed 8 --out " + out_c) == 0);
  CHECK(slurp(dir / "a" / "sessions.jsonl") != slurp(dir / "c" / "sessions.jsonl"));
}

TEST_CASE("train/eval round trip on a small rps dataset") {
  const fs::path dir = work_dir();
  const std::string data_dir = (dir / "data").string();
  REQUIRE(run("datagen --kind rps --alpha 0.8 --n 400 --seed 3 --out " + data_dir) == 0);

  const std::string model_dir = (dir / "model").string();
  const std::string train_args = "train --model pcmcnet --data " + data_dir +
                                 "/sessions.jsonl --schema " + data_dir +
                                 "/schema.json --hidden 1 --nodes 8 --epochs 3 --batch 8 "
                                 "--lr 0.01 --seed 11 --out " +
                                 model_dir;
  REQUIRE(run(train_args) == 0);
  CHECK(fs::exists(dir / "model" / "checkpoint.json"));
  CHECK(fs::exists(dir / "model" / "train_log.csv"));
  CHECK(fs::exists(dir / "model" / "manifest.json"));

  const std::string eval_dir = (dir / "eval").string();
  REQUIRE(run("eval --checkpoint " + model_dir + "/checkpoint.json --data " + data_dir +
              "/sessions.jsonl --schema " + data_dir + "/schema.json --seed 5 --out " +
              eval_dir) == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "eval" / "report_pcmcnet.json"));
  CHECK(report.at("model_kind") == "pcmcnet");
  CHECK(report.at("sessions") == 400);
  CHECK(report.at("top1").get<double>() <= report.at("top5").get<double>());
  CHECK(report.contains("config_hash"));
}

TEST_CASE("training is reproducible from the manifest seed") {
  const fs::path dir = work_dir();
  const std::string data_dir = (dir / "data").string();
  REQUIRE(run("datagen --kind rps --n 200 --seed 3 --out " + data_dir) == 0);
  const std::string base = "train --model pcmcnet --data " + data_dir +
                           "/sessions.jsonl --schema " + data_dir +
                           "/schema.json --hidden 1 --nodes 4 --epochs 2 --batch 4 --seed 13 "
                           "--out ";
  REQUIRE(run(base + (dir / "m1").string()) == 0);
  REQUIRE(run(base + (dir / "m2").string()) == 0);
  // the seconds column is wall clock; losses must match bitwise
  const auto losses_only = [](const std::string& csv) {
    std::string out;
    std::size_t start = 0;
    while (start < csv.size()) {
      std::size_t end = csv.find('\n', start);
      if (end == std::string::npos) end = csv.size();
      const std::string line = csv.substr(start, end - start);
      out += line.substr(0, line.rfind(','));
      out += '\n';
      start = end + 1;
    }
    return out;
  };
  CHECK(losses_only(slurp(dir / "m1" / "train_log.csv")) ==
        losses_only(slurp(dir / "m2" / "train_log.csv")));
  CHECK(slurp(dir / "m1" / "checkpoint.json") == slurp(dir / "m2" / "checkpoint.json"));
}

TEST_CASE("mnl, rankers, and mle train through the same entry point") {
  const fs::path dir = work_dir();
  const std::string data_dir = (dir / "data").string();
  REQUIRE(run("datagen --kind rps --n 300 --seed 5 --out " + data_dir) == 0);

  REQUIRE(run("train --model mnl --data " + data_dir + "/sessions.jsonl --schema " + data_dir +
              "/schema.json --out " + (dir / "mnl").string()) == 0);
  REQUIRE(run("train --model uniform --data " + data_dir + "/sessions.jsonl --schema " +
              data_dir + "/schema.json --out " + (dir / "uniform").string()) == 0);
  REQUIRE(run("train --model pcmc-mle --data " + data_dir + "/sessions.jsonl --schema " +
              data_dir + "/schema.json --seed 9 --out " + (dir / "mle").string()) == 0);

  // rankers need their numeric fields: cheapest on the rps schema must fail
  CHECK(run("train --model cheapest --data " + data_dir + "/sessions.jsonl --schema " +
            data_dir + "/schema.json --out " + (dir / "cheap").string()) == 0);

  const std::string eval_dir = (dir / "eval").string();
  REQUIRE(run("eval --checkpoint " + (dir / "mle" / "checkpoint.json").string() + " --data " +
              data_dir + "/sessions.jsonl --schema " + data_dir + "/schema.json --out " +
              eval_dir) == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "eval" / "report_pcmc-mle.json"));
  CHECK(report.at("model_kind") == "pcmc-mle");
}

TEST_CASE("heatmap command renders the oracle and flags IIA models") {
  const fs::path dir = work_dir();
  REQUIRE(run("heatmap --oracle --grid 16 --out " + (dir / "hm").string()) == 0);
  CHECK(fs::exists(dir / "hm" / "heatmap_oracle.csv"));
  CHECK(fs::exists(dir / "hm" / "heatmap_oracle.pgm"));

  // an MNL checkpoint on the context schema renders a constant field
  const std::string data_dir = (dir / "data").string();
  REQUIRE(run("datagen --kind context --n 300 --seed 5 --out " + data_dir) == 0);
  REQUIRE(run("train --model mnl --data " + data_dir + "/sessions.jsonl --schema " + data_dir +
              "/schema.json --out " + (dir / "mnl").string()) == 0);
  const std::string cmd = cli_path() + " heatmap --checkpoint " +
                          (dir / "mnl" / "checkpoint.json").string() + " --grid 8 --out " +
                          (dir / "hm2").string() + " > " + (dir / "hm2.log").string() + " 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(slurp(dir / "hm2.log").find("constant field detected") != std::string::npos);
}

TEST_CASE("exit codes: validation 2, io 4") {
  const fs::path dir = work_dir();
  // io error: missing data file
  CHECK(run("train --model mnl --data /nonexistent.jsonl --schema /nonexistent.json --out " +
            (dir / "x").string()) == 4);
  // validation error: bad model kind
  const std::string data_dir = (dir / "data").string();
  REQUIRE(run("datagen --kind rps --n 50 --seed 2 --out " + data_dir) == 0);
  CHECK(run("train --model fanciest --data " + data_dir + "/sessions.jsonl --schema " +
            data_dir + "/schema.json --out " + (dir / "y").string()) == 2);
  // validation error: unknown datagen kind
  CHECK(run("datagen --kind nope --n 5 --out " + (dir / "z").string()) == 2);
}

TEST_CASE("a run manifest reruns the command bit-identically") {
  const fs::path dir = work_dir();
  const std::string out_a = (dir / "a").string();
  REQUIRE(run("datagen --kind context --n 80 --seed 19 --out " + out_a) == 0);
  // rerun purely from the manifest; no other flags
  const std::string out_b = (dir / "b").string();
  REQUIRE(run("datagen --config " + (dir / "a" / "manifest.json").string() + " --out " +
              out_b) == 0);
  CHECK(slurp(dir / "a" / "sessions.jsonl") == slurp(dir / "b" / "sessions.jsonl"));
  CHECK(slurp(dir / "a" / "schema.json") == slurp(dir / "b" / "schema.json"));
}

TEST_CASE("config file supplies defaults, flags win") {
  const fs::path dir = work_dir();
  const std::string data_dir = (dir / "data").string();
  REQUIRE(run("datagen --kind rps --n 120 --seed 2 --out " + data_dir) == 0);

  std::ofstream cfg(dir / "config.json");
  cfg << R"({"hidden": 1, "nodes": 4, "epochs": 2, "batch": 4, "seed": 77})";
  cfg.close();

  const std::string out1 = (dir / "m1").string();
  REQUIRE(run("train --model pcmcnet --data " + data_dir + "/sessions.jsonl --schema " +
              data_dir + "/schema.json --config " + (dir / "config.json").string() +
              " --out " + out1) == 0);
  const pcmc::Manifest m1 = pcmc::Manifest::read(dir / "m1" / "manifest.json");
  const auto cfg1 = nlohmann::json::parse(m1.resolved_config_json);
  CHECK(cfg1.at("nodes") == 4);
  CHECK(cfg1.at("epochs") == 2);

  // flag overrides the config file value
  const std::string out2 = (dir / "m2").string();
  REQUIRE(run("train --model pcmcnet --data " + data_dir + "/sessions.jsonl --schema " +
              data_dir + "/schema.json --config " + (dir / "config.json").string() +
              " --nodes 8 --out " + out2) == 0);
  const auto cfg2 =
      nlohmann::json::parse(pcmc::Manifest::read(dir / "m2" / "manifest.json").resolved_config_json);
  CHECK(cfg2.at("nodes") == 8);
}

TEST_CASE("presets fill defaults without overriding explicit flags") {
  const fs::path dir = work_dir();
  const std::string data_dir = (dir / "data").string();
  REQUIRE(run("datagen --kind rps --n 100 --seed 6 --out " + data_dir) == 0);
  REQUIRE(run("train --model pcmcnet --preset synthetic --epochs 1 --data " + data_dir +
              "/sessions.jsonl --schema " + data_dir + "/schema.json --seed 3 --out " +
              (dir / "m").string()) == 0);
  const auto cfg = nlohmann::json::parse(
      pcmc::Manifest::read(dir / "m" / "manifest.json").resolved_config_json);
  CHECK(cfg.at("epochs") == 1);      // explicit flag wins
  CHECK(cfg.at("batch") == 1);       // synthetic preset
  CHECK(cfg.at("epsilon") == 0.5);   // synthetic preset
  CHECK(cfg.at("nodes") == 16);      // synthetic preset
  CHECK(cfg.at("hidden") == 3);      // synthetic preset
}

TEST_CASE("gradcheck subcommand passes and exits zero") {
  CHECK(run("gradcheck --trials 3 --seed 5") == 0);
}

TEST_CASE("search emits a ranked leaderboard capped by the budget") {
  const fs::path dir = work_dir();
  const std::string data_dir = (dir / "data").string();
  REQUIRE(run("datagen --kind rps --n 150 --seed 4 --out " + data_dir) == 0);
  REQUIRE(run("search --data " + data_dir + "/sessions.jsonl --schema " + data_dir +
              "/schema.json --budget 2 --epochs 2 --seed 21 --out " +
              (dir / "search").string()) == 0);
  const std::string csv = slurp(dir / "search" / "leaderboard.csv");
  CHECK(csv.rfind("rank,trial,val_nll", 0) == 0);
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 3);  // header + 2 trials
}
