#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "scr/data_io.hpp"
#include "scr/errors.hpp"

namespace scr {
namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (std::size_t i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

bool get_u64(std::istream& in, std::uint64_t& v) {
  std::array<unsigned char, 8> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) return false;
  v = 0;
  for (std::size_t i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return true;
}

}  // namespace

void write_matrix(std::ostream& out, const Matrix& m) {
  out.write(kMatrixMagic, sizeof kMatrixMagic);
  put_u64(out, m.rows());
  put_u64(out, m.cols());
  for (double v : m.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

Matrix read_matrix(std::istream& in, const std::string& source) {
  char magic[sizeof kMatrixMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMatrixMagic, sizeof magic) != 0) {
    throw LoadError(source + ": missing matrix header magic");
  }
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  if (!get_u64(in, rows) || !get_u64(in, cols)) throw LoadError(source + ": truncated header");
  if (cols != 0 && rows > (std::uint64_t{1} << 40) / cols) {
    throw LoadError(source + ": implausible dimensions");
  }
  std::vector<double> data(rows * cols);
  for (double& v : data) {
    std::uint64_t bits = 0;
    if (!get_u64(in, bits)) throw LoadError(source + ": truncated matrix payload");
    v = std::bit_cast<double>(bits);
  }
  return Matrix(rows, cols, std::move(data));
}

void write_matrix_file(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError(path.string() + ": cannot open for writing");
  write_matrix(out, m);
  if (!out) throw LoadError(path.string() + ": write failed");
}

Matrix read_matrix_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(path.string() + ": cannot open");
  Matrix m = read_matrix(in, path.string());
  if (in.peek() != std::char_traits<char>::eof()) {
    throw LoadError(path.string() + ": trailing bytes after matrix payload");
  }
  return m;
}

}  // namespace scr
