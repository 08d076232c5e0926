#include "dfr/ad/checkpoint.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "dfr/core/error.hpp"

namespace dfr::ad {

namespace {

constexpr char kMagic[6] = {'R', 'C', 'K', 'P', 'T', '1'};

void write_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw DataError("checkpoint: truncated file");
  return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

void write_f64(std::ostream& os, double v) {
  uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw DataError("checkpoint: truncated file");
  uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= uint64_t(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Tensor*>>& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("checkpoint: cannot open for write: " + path);
  os.write(kMagic, sizeof(kMagic));
  auto sorted = params;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [name, t] : sorted) {
    write_u32(os, uint32_t(name.size()));
    os.write(name.data(), std::streamsize(name.size()));
    write_u32(os, uint32_t(t->shape.size()));
    for (int d : t->shape) write_u32(os, uint32_t(d));
    for (long i = 0; i < t->data.size(); ++i) write_f64(os, double(t->data[i]));
  }
  if (!os) throw DataError("checkpoint: write failed: " + path);
}

std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot open: " + path);
  char magic[6];
  is.read(magic, 6);
  if (!is || std::memcmp(magic, kMagic, 6) != 0)
    throw DataError("checkpoint: bad magic in " + path);
  std::map<std::string, Tensor> out;
  while (true) {
    is.peek();
    if (is.eof()) break;
    uint32_t name_len = read_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw DataError("checkpoint: truncated name in " + path);
    uint32_t rank = read_u32(is);
    Shape shape(rank);
    for (uint32_t i = 0; i < rank; ++i) shape[i] = int(read_u32(is));
    Tensor t(shape);
    for (long i = 0; i < t.data.size(); ++i) t.data[i] = Real(read_f64(is));
    out.emplace(std::move(name), std::move(t));
  }
  return out;
}

}  // namespace dfr::ad
