#include "scr/snapshot.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "scr/data_io.hpp"
#include "scr/errors.hpp"

namespace scr {
namespace fs = std::filesystem;

void save_snapshot(const fs::path& dir, const Snapshot& snapshot) {
  fs::create_directories(dir);
  const auto& model = snapshot.model;
  {
    std::ofstream out(dir / "model.manifest", std::ios::binary | std::ios::trunc);
    if (!out) throw LoadError((dir / "model.manifest").string() + ": cannot open for writing");
    out << "format scr-mlp 1\n";
    out << "hops " << snapshot.hops << '\n';
    out << "activation relu\n";
    out << "layers " << model.layers().size() << '\n';
    for (std::size_t l = 0; l < model.layers().size(); ++l) {
      const auto& w = model.layers()[l].weight;
      out << "layer " << l << ' ' << w.rows() << ' ' << w.cols() << '\n';
    }
  }
  std::ofstream out(dir / "model.bin", std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError((dir / "model.bin").string() + ": cannot open for writing");
  for (const auto& layer : model.layers()) {
    write_matrix(out, layer.weight);
    write_matrix(out, Matrix(1, layer.bias.size(), layer.bias));
  }
  if (!out) throw LoadError((dir / "model.bin").string() + ": write failed");
}

Snapshot load_snapshot(const fs::path& dir) {
  const fs::path manifest_path = dir / "model.manifest";
  std::ifstream manifest(manifest_path);
  if (!manifest) throw LoadError(manifest_path.string() + ": missing snapshot manifest");

  std::size_t hops = 0;
  std::size_t num_layers = 0;
  std::vector<std::size_t> dims;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(manifest, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    const std::string where = manifest_path.string() + ":" + std::to_string(line_no) + ": ";
    if (key == "format") {
      std::string name;
      int version = 0;
      if (!(fields >> name >> version) || name != "scr-mlp" || version != 1) {
        throw LoadError(where + "unsupported snapshot format");
      }
    } else if (key == "hops") {
      if (!(fields >> hops)) throw LoadError(where + "bad hops line");
    } else if (key == "activation") {
      std::string act;
      if (!(fields >> act) || act != "relu") throw LoadError(where + "unsupported activation");
    } else if (key == "layers") {
      if (!(fields >> num_layers) || num_layers == 0) throw LoadError(where + "bad layer count");
    } else if (key == "layer") {
      std::size_t index = 0, fan_in = 0, fan_out = 0;
      const std::size_t expected = dims.empty() ? 0 : dims.size() - 1;
      if (!(fields >> index >> fan_in >> fan_out) || index != expected) {
        throw LoadError(where + "bad layer line");
      }
      if (dims.empty()) {
        dims.push_back(fan_in);
      } else if (dims.back() != fan_in) {
        throw LoadError(where + "layer dims do not chain");
      }
      dims.push_back(fan_out);
    } else if (!key.empty()) {
      throw LoadError(where + "unknown manifest key '" + key + "'");
    }
  }
  if (dims.size() != num_layers + 1 || num_layers == 0) {
    throw LoadError(manifest_path.string() + ": layer count does not match layer lines");
  }

  // Dropout is a training-time setting and is not needed to run inference.
  MlpModel model(dims, 0.0);
  const fs::path bin_path = dir / "model.bin";
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw LoadError(bin_path.string() + ": missing snapshot weights");
  auto& layers = model.mutable_layers();
  for (auto& layer : layers) {
    Matrix w = read_matrix(bin, bin_path.string());
    Matrix b = read_matrix(bin, bin_path.string());
    if (w.rows() != layer.weight.rows() || w.cols() != layer.weight.cols() || b.rows() != 1 ||
        b.cols() != layer.bias.size()) {
      throw LoadError(bin_path.string() + ": tensor shape disagrees with manifest");
    }
    layer.weight = std::move(w);
    layer.bias.assign(b.values().begin(), b.values().end());
  }
  if (bin.peek() != std::char_traits<char>::eof()) {
    throw LoadError(bin_path.string() + ": trailing bytes after last tensor");
  }
  return {std::move(model), hops};
}

}  // namespace scr
