#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <string_view>

#include "scr/data_io.hpp"
#include "scr/errors.hpp"

namespace scr {
namespace fs = std::filesystem;
namespace {

[[noreturn]] void fail_at(const fs::path& path, std::size_t line, const std::string& msg) {
  throw LoadError(path.string() + ":" + std::to_string(line) + ": " + msg);
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(path.string() + ": missing or unreadable file");
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError(path.string() + ": cannot open for writing");
  return out;
}

bool parse_index(std::string_view text, std::uint64_t& out) {
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && !text.empty();
}

// Calls fn(line_number, line) for every line; blank lines are rejected.
template <typename Fn>
void for_each_line(const fs::path& path, Fn&& fn) {
  auto in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) fail_at(path, line_no, "blank line");
    fn(line_no, std::string_view(line));
  }
}

std::vector<NodeId> read_id_list(const fs::path& path, std::size_t num_nodes) {
  std::vector<NodeId> ids;
  std::set<NodeId> seen;
  for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    std::uint64_t id = 0;
    if (!parse_index(line, id)) fail_at(path, line_no, "expected a node id");
    if (id >= num_nodes) fail_at(path, line_no, "node id " + std::to_string(id) + " out of range");
    if (!seen.insert(id).second) fail_at(path, line_no, "duplicate node id " + std::to_string(id));
    ids.push_back(id);
  });
  return ids;
}

Matrix read_features_csv(const fs::path& path) {
  std::vector<double> data;
  std::size_t cols = 0;
  std::size_t rows = 0;
  for_each_line(path, [&](std::size_t line_no, std::string_view line) {
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const auto field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
      double v = 0.0;
      const auto* end = field.data() + field.size();
      const auto [ptr, ec] = std::from_chars(field.data(), end, v);
      if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
        fail_at(path, line_no, "bad feature value '" + std::string(field) + "'");
      }
      data.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0) cols = count;
    if (count != cols) {
      fail_at(path, line_no, "ragged row: " + std::to_string(count) + " values, expected " +
                                 std::to_string(cols));
    }
    ++rows;
  });
  return Matrix(rows, cols, std::move(data));
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void check_split_against(const fs::path& path, const std::vector<NodeId>& ids,
                         const std::set<NodeId>& other, const std::string& other_name) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (other.count(ids[i])) {
      fail_at(path, i + 1, "node " + std::to_string(ids[i]) + " also appears in " + other_name);
    }
  }
}

}  // namespace

void validate_dataset(const Dataset& ds) {
  const std::size_t n = ds.num_nodes();
  if (ds.graph.num_nodes != n) throw LoadError("dataset: graph and feature node counts differ");
  if (ds.labels.size() != n) throw LoadError("dataset: label array length differs from node count");
  if (!ds.features.all_finite()) throw LoadError("dataset: non-finite feature value");
  std::set<NodeId> train(ds.splits.train.begin(), ds.splits.train.end());
  std::set<NodeId> valid(ds.splits.valid.begin(), ds.splits.valid.end());
  for (NodeId id : ds.splits.test) {
    if (train.count(id) || valid.count(id)) throw LoadError("dataset: splits overlap");
  }
  for (NodeId id : ds.splits.valid) {
    if (train.count(id)) throw LoadError("dataset: splits overlap");
  }
  for (NodeId id : ds.splits.train) {
    if (id >= n || ds.labels[id] >= ds.num_classes) {
      throw LoadError("dataset: train node " + std::to_string(id) + " lacks a valid label");
    }
  }
}

Dataset load_dataset(const fs::path& dir) {
  Dataset ds;
  const fs::path bin = dir / "features.bin";
  const fs::path csv = dir / "features.csv";
  if (fs::exists(bin)) {
    ds.features = read_matrix_file(bin);
  } else if (fs::exists(csv)) {
    ds.features = read_features_csv(csv);
  } else {
    throw LoadError((dir / "features.bin").string() + ": missing (no features.csv either)");
  }
  const fs::path features_path = fs::exists(bin) ? bin : csv;
  if (!ds.features.all_finite()) throw LoadError(features_path.string() + ": non-finite value");
  const std::size_t n = ds.features.rows();

  const fs::path edges_path = dir / "edges.tsv";
  std::vector<Edge> edges;
  for_each_line(edges_path, [&](std::size_t line_no, std::string_view line) {
    const auto tab = line.find('\t');
    std::uint64_t u = 0;
    std::uint64_t v = 0;
    if (tab == std::string_view::npos || !parse_index(line.substr(0, tab), u) ||
        !parse_index(line.substr(tab + 1), v)) {
      fail_at(edges_path, line_no, "expected two tab-separated node ids");
    }
    if (u >= n || v >= n) fail_at(edges_path, line_no, "node id out of range");
    edges.emplace_back(u, v);
  });
  ds.graph = build_graph(edges, n, true);

  const fs::path labels_path = dir / "labels.csv";
  ds.labels.assign(n, kUnknownLabel);
  std::uint64_t max_class = 0;
  bool any_label = false;
  for_each_line(labels_path, [&](std::size_t line_no, std::string_view line) {
    const auto comma = line.find(',');
    std::uint64_t id = 0;
    std::uint64_t cls = 0;
    if (comma == std::string_view::npos || !parse_index(line.substr(0, comma), id) ||
        !parse_index(line.substr(comma + 1), cls)) {
      fail_at(labels_path, line_no, "expected node_id,class_id");
    }
    if (id >= n) fail_at(labels_path, line_no, "node id " + std::to_string(id) + " out of range");
    if (cls >= n) fail_at(labels_path, line_no, "class id " + std::to_string(cls) + " out of range");
    if (ds.labels[id] != kUnknownLabel) fail_at(labels_path, line_no, "duplicate label for node");
    ds.labels[id] = cls;
    max_class = std::max(max_class, cls);
    any_label = true;
  });
  if (!any_label) throw LoadError(labels_path.string() + ": no labels");
  ds.num_classes = max_class + 1;

  const fs::path train_path = dir / "train.txt";
  const fs::path valid_path = dir / "valid.txt";
  const fs::path test_path = dir / "test.txt";
  ds.splits.train = read_id_list(train_path, n);
  ds.splits.valid = read_id_list(valid_path, n);
  ds.splits.test = read_id_list(test_path, n);
  const std::set<NodeId> train(ds.splits.train.begin(), ds.splits.train.end());
  const std::set<NodeId> valid(ds.splits.valid.begin(), ds.splits.valid.end());
  check_split_against(valid_path, ds.splits.valid, train, "train.txt");
  check_split_against(test_path, ds.splits.test, train, "train.txt");
  check_split_against(test_path, ds.splits.test, valid, "valid.txt");
  for (std::size_t i = 0; i < ds.splits.train.size(); ++i) {
    if (ds.labels[ds.splits.train[i]] == kUnknownLabel) {
      fail_at(train_path, i + 1, "train node " + std::to_string(ds.splits.train[i]) + " has no label");
    }
  }
  return ds;
}

void save_dataset(const fs::path& dir, const Dataset& ds) {
  validate_dataset(ds);
  fs::create_directories(dir);
  {
    auto out = open_output(dir / "edges.tsv");
    for (NodeId i = 0; i < ds.graph.num_nodes; ++i) {
      for (NodeId j : ds.graph.neighbors(i)) {
        if (i <= j) out << i << '\t' << j << '\n';
      }
    }
  }
  write_matrix_file(dir / "features.bin", ds.features);
  {
    auto out = open_output(dir / "labels.csv");
    for (NodeId i = 0; i < ds.labels.size(); ++i) {
      if (ds.labels[i] != kUnknownLabel) out << i << ',' << ds.labels[i] << '\n';
    }
  }
  const std::pair<const char*, const std::vector<NodeId>*> splits[] = {
      {"train.txt", &ds.splits.train}, {"valid.txt", &ds.splits.valid}, {"test.txt", &ds.splits.test}};
  for (const auto& [name, ids] : splits) {
    auto out = open_output(dir / name);
    for (NodeId id : *ids) out << id << '\n';
  }
}

void write_features_csv(const fs::path& path, const Matrix& features) {
  auto out = open_output(path);
  for (std::size_t r = 0; r < features.rows(); ++r) {
    const auto row = features.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
    out << '\n';
  }
}

}  // namespace scr
