#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "scr/checksum.hpp"
#include "scr/cli.hpp"
#include "scr/config.hpp"
#include "scr/data_io.hpp"
#include "scr/graph.hpp"
#include "scr/snapshot.hpp"
#include "temp_dir.hpp"

using namespace scr;
using scr::testing::TempDir;
using scr::testing::read_file;
using scr::testing::write_file;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome scr_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::run(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::string p(const std::filesystem::path& path) { return path.string(); }

// Small SBM with propagated hops under dir.
void make_fixture(const TempDir& dir, const std::string& hops = "2", const std::string& sigma = "1.0") {
  REQUIRE(scr_run({"synth", "--out", p(dir.path()), "--n", "200", "--classes", "3", "--p-in", "0.05",
                   "--p-out", "0.005", "--dim", "8", "--sigma", sigma, "--labels-per-class", "5",
                   "--seed", "11"})
              .code == 0);
  REQUIRE(scr_run({"propagate", "--data", p(dir.path()), "--hops", hops}).code == 0);
}

std::vector<std::string> train_args(const TempDir& data, const std::filesystem::path& out) {
  return {"train", "--data", p(data.path()), "--out", p(out), "--epochs", "10", "--hidden", "16",
          "--beta", "3", "--batch-unlabeled", "16", "--seed", "5"};
}

std::vector<std::string> extend(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::string field(const std::string& line, const std::string& key) {
  const auto at = line.find(key + "=");
  REQUIRE(at != std::string::npos);
  const auto start = at + key.size() + 1;
  return line.substr(start, line.find_first_of(" \n", start) - start);
}

}  // namespace

TEST_CASE("synth") {
  TempDir a, b;
  const auto first = scr_run({"synth", "--out", p(a.path()), "--n", "1000", "--classes", "4", "--seed", "7"});
  const auto second = scr_run({"synth", "--out", p(b.path()), "--n", "1000", "--classes", "4", "--seed", "7"});
  REQUIRE(first.code == 0);
  REQUIRE(second.code == 0);
  CHECK(first.out == second.out);
  for (const char* name : {"edges.tsv", "features.bin", "labels.csv", "train.txt", "valid.txt", "test.txt"}) {
    CHECK(file_checksum(a / name) == file_checksum(b / name));
  }
  CHECK(first.out.rfind("N=1000 ", 0) == 0);
  CHECK(field(first.out, "C") == "4");
  CHECK(field(first.out, "train") == "40");
  const Dataset ds = load_dataset(a.path());
  CHECK(field(first.out, "M") == std::to_string(ds.graph.num_edges / 2));

  TempDir c;
  const auto defaults = scr_run({"synth", "--out", p(c.path())});
  CHECK(defaults.code == 0);
  CHECK(defaults.out.rfind("N=1000 ", 0) == 0);

  TempDir d;
  const auto bad = scr_run({"synth", "--out", p(d.path()), "--n", "20", "--labels-per-class", "10"});
  CHECK(bad.code == cli::kExitUsage);
  CHECK(bad.err.find("config error") != std::string::npos);
}

TEST_CASE("propagate") {
  TempDir dir;
  REQUIRE(scr_run({"synth", "--out", p(dir.path()), "--n", "60", "--classes", "2", "--labels-per-class", "3"}).code == 0);
  SUBCASE("zero hops copy the features") {
    REQUIRE(scr_run({"propagate", "--data", p(dir.path()), "--hops", "0"}).code == 0);
    CHECK(read_file(dir / "features_hop_0.bin") == read_file(dir / "features.bin"));
    CHECK_FALSE(std::filesystem::exists(dir / "features_hop_1.bin"));
  }
  SUBCASE("idempotent") {
    REQUIRE(scr_run({"propagate", "--data", p(dir.path()), "--hops", "3"}).code == 0);
    std::vector<std::uint64_t> sums;
    for (int k = 0; k <= 3; ++k) sums.push_back(file_checksum(dir / ("features_hop_" + std::to_string(k) + ".bin")));
    REQUIRE(scr_run({"propagate", "--data", p(dir.path()), "--hops", "3"}).code == 0);
    for (int k = 0; k <= 3; ++k) {
      CHECK(file_checksum(dir / ("features_hop_" + std::to_string(k) + ".bin")) == sums[k]);
    }
  }
  SUBCASE("two-node fixture") {
    TempDir tiny;
    write_file(tiny / "edges.tsv", "0\t1\n");
    write_file(tiny / "features.csv", "1,0\n0,1\n");
    write_file(tiny / "labels.csv", "0,0\n1,1\n");
    write_file(tiny / "train.txt", "0\n");
    write_file(tiny / "valid.txt", "1\n");
    write_file(tiny / "test.txt", "");
    REQUIRE(scr_run({"propagate", "--data", p(tiny.path()), "--hops", "1"}).code == 0);
    CHECK(read_matrix_file(tiny / "features_hop_1.bin") == Matrix{{0.5, 0.5}, {0.5, 0.5}});
  }
  SUBCASE("missing dataset") {
    TempDir empty;
    CHECK(scr_run({"propagate", "--data", p(empty.path()), "--hops", "1"}).code == cli::kExitData);
  }
}

TEST_CASE("train") {
  TempDir data;
  make_fixture(data);
  SUBCASE("outputs and eval consistency") {
    TempDir out;
    const auto run = scr_run(train_args(data, out.path()));
    REQUIRE(run.code == 0);
    for (const char* name : {"metrics.jsonl", "config.resolved", "model.manifest", "model.bin"}) {
      CHECK(std::filesystem::exists(out / name));
    }
    const auto metrics = read_metrics(out / "metrics.jsonl");
    CHECK(metrics.size() == 10);
    const std::size_t best = std::stoul(field(run.out, "best_epoch"));
    char expected[16];
    std::snprintf(expected, sizeof expected, "%.4f", metrics.at(best).values.at("test_acc"));
    CHECK(field(run.out, "test_acc") == expected);

    const auto eval = scr_run({"eval", "--data", p(data.path()), "--model", p(out.path()), "--split", "test"});
    REQUIRE(eval.code == 0);
    CHECK(eval.out == std::string(expected) + "\n");
    CHECK(scr_run({"eval", "--data", p(data.path()), "--model", p(out.path())}).out == eval.out);

    const auto resolved = parse_config_text(read_file(out / "config.resolved"));
    CHECK(resolved.size() == config_keys().size());
    CHECK(resolved.at("epochs") == "10");
    CHECK(resolved.at("mode") == "scr");
    CHECK(resolved.at("lambda") == "0.5");
  }
  SUBCASE("lambda 0 matches the library baseline") {
    TempDir out;
    REQUIRE(scr_run(extend(train_args(data, out.path()), {"--mode", "scr", "--lambda", "0"})).code == 0);
    TrainConfig c = TrainConfig::defaults(Mode::scr);
    c.epochs = 10;
    c.hidden = {16};
    c.beta = 3;
    c.batch_unlabeled = 16;
    c.seed = 5;
    c.lambda = 0.0;
    const Dataset ds = load_dataset(data.path());
    const Matrix inputs = concat_hops(propagate_features(normalize_adjacency(ds.graph, true), ds.features, 2));
    const auto result = train(c, TrainData{inputs, ds.labels, ds.num_classes, ds.splits});
    std::vector<MetricRecord> expected;
    for (const auto& m : result.metrics) expected.push_back(to_record(m));
    const auto got = read_metrics(out / "metrics.jsonl");
    CHECK(got == expected);
    for (const auto& r : got) CHECK(r.values.at("consistency_loss") == 0.0);
    CHECK(load_snapshot(out.path()).model.flatten() == result.model.flatten());
  }
  SUBCASE("scr_m smoke run") {
    TempDir out;
    const auto run = scr_run(extend(train_args(data, out.path()), {"--mode", "scr_m", "--alpha", "0.999", "--tau", "3"}));
    REQUIRE(run.code == 0);
    for (const char* key : {"train_acc", "valid_acc", "test_acc"}) {
      const double acc = std::stod(field(run.out, key));
      CHECK(acc >= 0.0);
      CHECK(acc <= 1.0);
    }
    const auto metrics = read_metrics(out / "metrics.jsonl");
    CHECK(metrics[2].values.at("warmup_active") == 1.0);
    CHECK(metrics[3].values.at("warmup_active") == 0.0);
  }
  SUBCASE("config file with overrides") {
    TempDir out;
    write_file(out / "run.conf", "mode = scr_m\nlambda = 0.3\nepochs = 4\n");
    REQUIRE(scr_run(extend(train_args(data, out / "r"), {"--config", p(out / "run.conf"), "--lambda", "0.4"})).code == 0);
    const auto resolved = parse_config_text(read_file(out / "r" / "config.resolved"));
    CHECK(resolved.at("mode") == "scr_m");
    CHECK(resolved.at("lambda") == "0.4");
    CHECK(resolved.at("epochs") == "10");
    CHECK(resolved.at("dist") == "kl");
  }
  SUBCASE("invalid configuration") {
    TempDir out;
    write_file(out / "typo.conf", "lamda = 0.3\n");
    const auto typo = scr_run(extend(train_args(data, out / "a"), {"--config", p(out / "typo.conf")}));
    CHECK(typo.code == cli::kExitUsage);
    CHECK(typo.err.find("typo.conf") != std::string::npos);
    CHECK_FALSE(std::filesystem::exists(out / "a"));
    CHECK(scr_run(extend(train_args(data, out / "b"), {"--lambda", "-1"})).code == cli::kExitUsage);
    CHECK(scr_run(extend(train_args(data, out / "c"), {"--dist", "cosine"})).code == cli::kExitUsage);
    CHECK(scr_run(extend(train_args(data, out / "d"), {"--bogus", "1"})).code == cli::kExitUsage);
    CHECK_FALSE(std::filesystem::exists(out / "b"));
  }
  SUBCASE("missing hop features") {
    TempDir out;
    CHECK(scr_run(extend(train_args(data, out.path()), {"--hops", "4"})).code == cli::kExitData);
  }
}

TEST_CASE("shipped configs") {
  const std::filesystem::path dir = SCR_CONFIG_DIR;
  const TrainConfig scr = resolve_config(parse_config_text(read_file(dir / "scr.conf")), {});
  CHECK(scr.mode == Mode::scr);
  CHECK(scr.lambda == 0.5);
  CHECK(scr.views == 2);
  CHECK(scr.dist == DistanceKind::mse);
  CHECK(scr.eta_start == 0.85);
  CHECK(scr.eta_end == 0.85);
  CHECK(scr.temperature == 0.5);
  CHECK(scr.beta == 20);

  const TrainConfig scr_m = resolve_config(parse_config_text(read_file(dir / "scr_m.conf")), {});
  CHECK(scr_m.mode == Mode::scr_m);
  CHECK(scr_m.lambda == 0.2);
  CHECK(scr_m.views == 1);
  CHECK(scr_m.dist == DistanceKind::kl);
  CHECK(scr_m.eta_start == 0.9);
  CHECK(scr_m.eta_end == 0.8);
  CHECK(scr_m.alpha == 0.999);
  CHECK(scr_m.temperature == 0.5);
  CHECK(scr_m.beta == 20);
}

TEST_CASE("eval") {
  TempDir data;
  make_fixture(data, "1", "0.0");
  TempDir out;
  REQUIRE(scr_run({"train", "--data", p(data.path()), "--out", p(out.path()), "--epochs", "60",
                   "--hops", "1", "--lambda", "0", "--dropout", "0", "--lr", "0.05", "--seed", "1"})
              .code == 0);
  const auto train_split = scr_run({"eval", "--data", p(data.path()), "--model", p(out.path()), "--split", "train"});
  CHECK(train_split.code == 0);
  CHECK(train_split.out == "1.0000\n");
  TempDir empty;
  const auto missing = scr_run({"eval", "--data", p(data.path()), "--model", p(empty.path())});
  CHECK(missing.code == cli::kExitData);
  CHECK(scr_run({"eval", "--data", p(data.path()), "--model", p(out.path()), "--split", "bogus"}).code ==
        cli::kExitUsage);
  CHECK(scr_run({"eval", "--data", p(data.path())}).code == cli::kExitUsage);
}

TEST_CASE("usage") {
  const auto help = scr_run({"train", "--help"});
  CHECK(help.code == 0);
  for (const auto& key : config_keys()) CHECK(help.out.find("--" + key) != std::string::npos);
  for (const char* flag : {"--data", "--out", "--config"}) CHECK(help.out.find(flag) != std::string::npos);
  const auto synth_help = scr_run({"synth", "--help"});
  for (const char* flag : {"--out", "--n", "--classes", "--p-in", "--p-out", "--dim", "--sigma",
                           "--labels-per-class", "--seed"}) {
    CHECK(synth_help.out.find(flag) != std::string::npos);
  }
  CHECK(scr_run({"propagate", "--help"}).out.find("--hops") != std::string::npos);
  CHECK(scr_run({"eval", "--help"}).out.find("--split") != std::string::npos);
  CHECK(scr_run({}).code == cli::kExitUsage);
  CHECK(scr_run({"bogus"}).code == cli::kExitUsage);
  CHECK(scr_run({"synth", "--frobnicate"}).code == cli::kExitUsage);
}

TEST_CASE("binary exit codes and data dir from the environment") {
  TempDir dir;
  const std::string bin = SCR_BINARY;
  CHECK(std::system((bin + " --help > /dev/null").c_str()) == 0);
  CHECK(WEXITSTATUS(std::system((bin + " synth --nope 2> /dev/null").c_str())) == cli::kExitUsage);
  const std::string env = std::string(cli::kDataDirEnv) + "=" + p(dir.path()) + " ";
  CHECK(std::system((env + bin + " synth --n 50 --classes 2 --labels-per-class 2 > /dev/null").c_str()) == 0);
  CHECK(std::filesystem::exists(dir / "features.bin"));
  CHECK(std::system((env + bin + " propagate --hops 1 > /dev/null").c_str()) == 0);
  CHECK(std::filesystem::exists(dir / "features_hop_1.bin"));
  TempDir empty;
  CHECK(WEXITSTATUS(std::system((bin + " propagate --data " + p(empty.path()) + " 2> /dev/null").c_str())) ==
        cli::kExitData);
}
