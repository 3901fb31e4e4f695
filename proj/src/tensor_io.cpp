#include "ta/tensor_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "ta/errors.hpp"

namespace ta {

namespace {

constexpr char kMagic[4] = {'T', 'N', 'S', 'R'};

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  b[0] = static_cast<unsigned char>(v & 0xFF);
  b[1] = static_cast<unsigned char>((v >> 8) & 0xFF);
  b[2] = static_cast<unsigned char>((v >> 16) & 0xFF);
  b[3] = static_cast<unsigned char>((v >> 24) & 0xFF);
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw IoError("tensor load: truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw IoError("tensor load: truncated data");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void dump_tensor(std::ostream& os, const Tensor& t) {
  os.write(kMagic, 4);
  write_u32(os, static_cast<std::uint32_t>(t.rank()));
  for (int i = 0; i < t.rank(); ++i) write_u32(os, static_cast<std::uint32_t>(t.dim(i)));
  for (std::size_t i = 0; i < t.size(); ++i) write_f64(os, t[i]);
  if (!os) throw IoError("tensor dump: write failed");
}

Tensor load_tensor(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("tensor load: bad magic, expected TNSR");
  }
  const std::uint32_t rank = read_u32(is);
  if (rank > 8) throw IoError("tensor load: implausible rank " + std::to_string(rank));
  std::vector<int> shape(rank);
  for (std::uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<int>(read_u32(is));
  const std::size_t n = shape_numel(shape);
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = read_f64(is);
  return Tensor(std::move(shape), std::move(data));
}

void dump_tensor_file(const std::string& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  dump_tensor(os, t);
}

Tensor load_tensor_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open for reading: " + path);
  return load_tensor(is);
}

std::size_t tensor_record_size(const Tensor& t) {
  return 4 + 4 + 4 * static_cast<std::size_t>(t.rank()) + 8 * t.size();
}

}  // namespace ta
