#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "scr/checksum.hpp"
#include "scr/data_io.hpp"
#include "scr/errors.hpp"
#include "scr/snapshot.hpp"
#include "temp_dir.hpp"

using namespace scr;
using scr::testing::TempDir;
using scr::testing::read_file;
using scr::testing::write_file;

namespace {

Dataset two_node() {
  Dataset ds;
  const std::vector<Edge> edges{{0, 1}};
  ds.graph = build_graph(edges, 2, true);
  ds.features = Matrix{{1.0, -0.5}, {0.25, 3.0}};
  ds.labels = {0, 1};
  ds.num_classes = 2;
  ds.splits = {{0}, {1}, {}};
  return ds;
}

void write_two_node_text(const TempDir& dir) {
  write_file(dir / "edges.tsv", "0\t1\n");
  write_file(dir / "features.csv", "1,-0.5\n0.25,3\n");
  write_file(dir / "labels.csv", "0,0\n1,1\n");
  write_file(dir / "train.txt", "0\n");
  write_file(dir / "valid.txt", "1\n");
  write_file(dir / "test.txt", "");
}

std::string load_error(const std::filesystem::path& dir) {
  try {
    load_dataset(dir);
  } catch (const LoadError& e) {
    return e.what();
  }
  return {};
}

std::vector<std::string> dataset_files() {
  return {"edges.tsv", "features.bin", "labels.csv", "train.txt", "valid.txt", "test.txt"};
}

}  // namespace

TEST_CASE("matrix container round trip") {
  Rng rng(1);
  const Matrix m = oracle::random_matrix(7, 3, rng, 1e10);
  std::stringstream buf;
  write_matrix(buf, m);
  CHECK(buf.str().size() == 8 + 16 + 7 * 3 * 8);
  CHECK(buf.str().substr(0, 8) == "SCRMAT01");
  CHECK(read_matrix(buf, "mem") == m);

  TempDir dir;
  write_matrix_file(dir / "m.bin", Matrix(0, 4));
  CHECK(read_matrix_file(dir / "m.bin") == Matrix(0, 4));
  write_file(dir / "bad.bin", "SCRMAT02" + std::string(16, '\0'));
  CHECK_THROWS_AS(read_matrix_file(dir / "bad.bin"), LoadError);
  write_file(dir / "short.bin", read_file(dir / "m.bin").substr(0, 12));
  CHECK_THROWS_AS(read_matrix_file(dir / "short.bin"), LoadError);
  write_matrix_file(dir / "m.bin", m);
  write_file(dir / "long.bin", read_file(dir / "m.bin") + "x");
  CHECK_THROWS_AS(read_matrix_file(dir / "long.bin"), LoadError);
}

TEST_CASE("two-node dataset round trip") {
  TempDir text;
  write_two_node_text(text);
  const Dataset loaded = load_dataset(text.path());
  const Dataset expected = two_node();
  CHECK(loaded.features == expected.features);
  CHECK(loaded.labels == expected.labels);
  CHECK(loaded.num_classes == 2);
  CHECK(loaded.graph.col_indices == expected.graph.col_indices);
  CHECK(loaded.splits.train == expected.splits.train);
  CHECK(loaded.splits.test.empty());

  TempDir a, b;
  save_dataset(a.path(), loaded);
  save_dataset(b.path(), load_dataset(a.path()));
  for (const auto& name : dataset_files()) CHECK(read_file(a / name) == read_file(b / name));
  CHECK(read_file(a / "edges.tsv") == "0\t1\n");
  CHECK(load_dataset(a.path()).features == expected.features);
}

TEST_CASE("features csv is exact") {
  Rng rng(2);
  TempDir dir;
  const Matrix m = oracle::random_matrix(5, 4, rng, 3.0);
  write_features_csv(dir / "features.csv", m);
  write_file(dir / "edges.tsv", "");
  write_file(dir / "labels.csv", "0,0\n");
  write_file(dir / "train.txt", "0\n");
  write_file(dir / "valid.txt", "1\n");
  write_file(dir / "test.txt", "2\n");
  CHECK(load_dataset(dir.path()).features == m);
}

TEST_CASE("loader rejects malformed input with file and line") {
  TempDir dir;
  SUBCASE("overlapping splits") {
    write_two_node_text(dir);
    write_file(dir / "test.txt", "0\n");
    const auto msg = load_error(dir.path());
    CHECK(msg.find("test.txt:1:") != std::string::npos);
  }
  SUBCASE("ragged feature rows") {
    write_two_node_text(dir);
    write_file(dir / "features.csv", "1,2\n3\n");
    CHECK(load_error(dir.path()).find("features.csv:2:") != std::string::npos);
  }
  SUBCASE("bad edge line") {
    write_two_node_text(dir);
    write_file(dir / "edges.tsv", "0\t1\n0 1\n");
    CHECK(load_error(dir.path()).find("edges.tsv:2:") != std::string::npos);
  }
  SUBCASE("edge out of range") {
    write_two_node_text(dir);
    write_file(dir / "edges.tsv", "0\t2\n");
    CHECK(load_error(dir.path()).find("edges.tsv:1:") != std::string::npos);
  }
  SUBCASE("label out of range") {
    write_two_node_text(dir);
    write_file(dir / "labels.csv", "0,0\n1,7\n");
    CHECK(load_error(dir.path()).find("labels.csv:2:") != std::string::npos);
  }
  SUBCASE("unlabeled train node") {
    write_two_node_text(dir);
    write_file(dir / "labels.csv", "1,1\n");
    CHECK(load_error(dir.path()).find("train.txt:1:") != std::string::npos);
  }
  SUBCASE("duplicate split id") {
    write_two_node_text(dir);
    write_file(dir / "valid.txt", "1\n1\n");
    CHECK(load_error(dir.path()).find("valid.txt:2:") != std::string::npos);
  }
  SUBCASE("missing file") {
    write_two_node_text(dir);
    std::filesystem::remove(dir / "train.txt");
    CHECK(load_error(dir.path()).find("train.txt") != std::string::npos);
  }
  SUBCASE("non-finite feature") {
    write_two_node_text(dir);
    write_file(dir / "features.csv", "1,nan\n0,0\n");
    CHECK(load_error(dir.path()).find("features.csv:1:") != std::string::npos);
  }
}

TEST_CASE("generate_sbm") {
  SUBCASE("no cross edges when p_out is 0") {
    SbmParams p;
    p.num_nodes = 200;
    p.num_classes = 2;
    p.p_in = 0.1;
    p.p_out = 0.0;
    Rng rng(3);
    const Dataset ds = generate_sbm(p, rng);
    for (NodeId i = 0; i < ds.graph.num_nodes; ++i) {
      for (NodeId j : ds.graph.neighbors(i)) CHECK(ds.labels[i] == ds.labels[j]);
    }
    CHECK(ds.graph.num_edges > 0);
  }
  SUBCASE("noiseless features equal class means") {
    SbmParams p;
    p.num_nodes = 100;
    p.sigma = 0.0;
    Rng rng(4);
    const Dataset ds = generate_sbm(p, rng);
    std::vector<std::vector<double>> means(p.num_classes);
    for (NodeId i = 0; i < ds.num_nodes(); ++i) {
      const auto row = ds.features.row(i);
      auto& mean = means[ds.labels[i]];
      if (mean.empty()) {
        mean.assign(row.begin(), row.end());
        double norm = 0.0;
        for (double v : row) norm += v * v;
        CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-12));
      }
      CHECK(std::equal(row.begin(), row.end(), mean.begin()));
    }
    for (std::size_t a = 0; a < p.num_classes; ++a) {
      for (std::size_t b = a + 1; b < p.num_classes; ++b) CHECK(means[a] != means[b]);
    }
  }
  SUBCASE("intra-class edge counts follow the binomial") {
    const SbmParams p;  // 1000 nodes, 4 classes, p_in 0.02
    Rng rng(5);
    const Dataset ds = generate_sbm(p, rng);
    std::vector<std::size_t> intra(p.num_classes, 0), sizes(p.num_classes, 0);
    for (NodeId i = 0; i < ds.num_nodes(); ++i) {
      ++sizes[ds.labels[i]];
      for (NodeId j : ds.graph.neighbors(i)) {
        if (i < j && ds.labels[i] == ds.labels[j]) ++intra[ds.labels[i]];
      }
    }
    const double pairs = 250.0 * 249.0 / 2.0;
    const double mean = pairs * p.p_in;
    const double sd = std::sqrt(pairs * p.p_in * (1.0 - p.p_in));
    CHECK(mean == doctest::Approx(622.5));
    for (std::size_t c = 0; c < p.num_classes; ++c) {
      CHECK(sizes[c] == 250);
      CHECK(std::abs(static_cast<double>(intra[c]) - mean) < 4.0 * sd);
    }
  }
  SUBCASE("splits") {
    const SbmParams p;
    Rng rng(6);
    const Dataset ds = generate_sbm(p, rng);
    validate_dataset(ds);
    CHECK(ds.splits.train.size() == 40);
    CHECK(ds.splits.valid.size() == 480);
    CHECK(ds.splits.test.size() == 480);
    std::vector<std::size_t> per_class(p.num_classes, 0);
    for (NodeId id : ds.splits.train) ++per_class[ds.labels[id]];
    for (std::size_t c : per_class) CHECK(c == 10);
    std::set<NodeId> all(ds.splits.train.begin(), ds.splits.train.end());
    all.insert(ds.splits.valid.begin(), ds.splits.valid.end());
    all.insert(ds.splits.test.begin(), ds.splits.test.end());
    CHECK(all.size() == 1000);
  }
  SUBCASE("seeded reproducibility and file round trip") {
    const SbmParams p;
    Rng a(7), b(7);
    const Dataset da = generate_sbm(p, a);
    const Dataset db = generate_sbm(p, b);
    CHECK(da.features == db.features);
    CHECK(da.graph.col_indices == db.graph.col_indices);
    TempDir x, y;
    save_dataset(x.path(), da);
    save_dataset(y.path(), load_dataset(x.path()));
    for (const auto& name : dataset_files()) CHECK(file_checksum(x / name) == file_checksum(y / name));
    const Dataset loaded = load_dataset(x.path());
    CHECK(loaded.features == da.features);
    CHECK(loaded.labels == da.labels);
    CHECK(loaded.graph.row_offsets == da.graph.row_offsets);
    CHECK(loaded.graph.col_indices == da.graph.col_indices);
  }
  SUBCASE("infeasible parameters") {
    Rng rng(8);
    SbmParams p;
    p.labels_per_class = 300;
    CHECK_THROWS_AS(generate_sbm(p, rng), ConfigError);
    p = SbmParams{};
    p.p_out = p.p_in;
    CHECK_THROWS_AS(generate_sbm(p, rng), ConfigError);
    p = SbmParams{};
    p.num_classes = 0;
    CHECK_THROWS_AS(generate_sbm(p, rng), ConfigError);
  }
}

TEST_CASE("metrics jsonl") {
  TempDir dir;
  write_metrics({}, dir / "empty.jsonl");
  CHECK(read_file(dir / "empty.jsonl").empty());
  CHECK(read_metrics(dir / "empty.jsonl").empty());

  std::vector<MetricRecord> records;
  for (std::size_t e = 0; e < 3; ++e) {
    EpochMetrics m;
    m.epoch = e;
    m.eta = 0.85;
    m.supervised_loss = 1.0 / (3.0 + static_cast<double>(e));
    m.valid_acc = 0.1 * static_cast<double>(e);
    m.confident_set_size = 17 + e;
    m.warmup_active = e == 0;
    records.push_back(to_record(m));
  }
  write_metrics(records, dir / "m.jsonl");
  const auto back = read_metrics(dir / "m.jsonl");
  CHECK(back == records);
  CHECK(back[1].values.at("eta") == 0.85);
  CHECK(back[0].values.at("warmup_active") == 1.0);
  const std::string text = read_file(dir / "m.jsonl");
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  CHECK(text.rfind("{\"confident_set_size\":17.0,\"consistency_loss\"", 0) == 0);

  write_file(dir / "bad.jsonl", "{\"epoch\":0}\n{\"epoch\":1,\"x\":\n");
  try {
    read_metrics(dir / "bad.jsonl");
    FAIL("expected a load error");
  } catch (const LoadError& e) {
    CHECK(std::string(e.what()).find("bad.jsonl:2:") != std::string::npos);
  }
  write_file(dir / "order.jsonl", "{\"epoch\":1}\n{\"epoch\":1}\n");
  CHECK_THROWS_AS(read_metrics(dir / "order.jsonl"), LoadError);
  write_file(dir / "str.jsonl", "{\"epoch\":0,\"eta\":\"high\"}\n");
  CHECK_THROWS_AS(read_metrics(dir / "str.jsonl"), LoadError);
}

TEST_CASE("model snapshot round trip") {
  Rng rng(9);
  const auto model = MlpModel::glorot({6, 5, 4, 3}, 0.5, rng);
  TempDir a, b;
  save_snapshot(a.path(), Snapshot{model, 2});
  const Snapshot loaded = load_snapshot(a.path());
  CHECK(loaded.hops == 2);
  CHECK(loaded.model.flatten() == model.flatten());
  CHECK(loaded.model.dims() == model.dims());
  save_snapshot(b.path(), loaded);
  CHECK(read_file(a / "model.bin") == read_file(b / "model.bin"));
  CHECK(read_file(a / "model.manifest") == read_file(b / "model.manifest"));

  write_file(a / "model.manifest", read_file(b / "model.manifest") + "bogus 1\n");
  CHECK_THROWS_AS(load_snapshot(a.path()), LoadError);
  std::filesystem::remove(b / "model.bin");
  CHECK_THROWS_AS(load_snapshot(b.path()), LoadError);
  TempDir empty;
  CHECK_THROWS_AS(load_snapshot(empty.path()), LoadError);
}
