#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "scr/graph.hpp"
#include "scr/matrix.hpp"
#include "scr/rng.hpp"
#include "scr/train.hpp"

namespace scr {

// Binary matrix container: 8-byte magic "SCRMAT01", rows and cols as
// little-endian u64, then rows*cols little-endian IEEE-754 doubles, row-major.
inline constexpr char kMatrixMagic[8] = {'S', 'C', 'R', 'M', 'A', 'T', '0', '1'};

void write_matrix(std::ostream& out, const Matrix& m);
// `source` is only used in error messages.
Matrix read_matrix(std::istream& in, const std::string& source);
void write_matrix_file(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_file(const std::filesystem::path& path);

struct Dataset {
  SparseGraph graph;  // symmetric, unnormalized
  Matrix features;    // N x d
  std::vector<Label> labels;  // kUnknownLabel where absent
  std::size_t num_classes = 0;
  Splits splits;

  std::size_t num_nodes() const { return features.rows(); }
};

// Throws LoadError naming the file and line on any inconsistency.
void validate_dataset(const Dataset& ds);

// Directory layout: edges.tsv, features.bin (or features.csv), labels.csv,
// train.txt, valid.txt, test.txt. Node count comes from the features; the
// graph is symmetrized on load.
Dataset load_dataset(const std::filesystem::path& dir);

// Writes edges.tsv (each undirected edge once, u < v, sorted), features.bin,
// labels.csv and the split files.
void save_dataset(const std::filesystem::path& dir, const Dataset& ds);

// Writes features.csv with round-trip exact decimal values.
void write_features_csv(const std::filesystem::path& path, const Matrix& features);

struct SbmParams {
  std::size_t num_nodes = 1000;
  std::size_t num_classes = 4;
  double p_in = 0.02;
  double p_out = 0.002;
  std::size_t feature_dim = 32;
  double sigma = 1.0;
  std::size_t labels_per_class = 10;
};

// Planted-partition graph with balanced random class assignment. Features are
// a per-class random unit vector plus sigma * N(0, 1) noise. The train split
// holds labels_per_class nodes per class; the rest is split evenly between
// valid and test. Throws ConfigError on infeasible parameters.
Dataset generate_sbm(const SbmParams& params, Rng& rng);

struct MetricRecord {
  std::size_t epoch = 0;
  std::map<std::string, double> values;

  friend bool operator==(const MetricRecord&, const MetricRecord&) = default;
};

MetricRecord to_record(const EpochMetrics& m);

// One JSON object per line, keys sorted, shortest round-trip doubles.
void write_metrics(const std::vector<MetricRecord>& records, const std::filesystem::path& path);
std::vector<MetricRecord> read_metrics(const std::filesystem::path& path);

}  // namespace scr
