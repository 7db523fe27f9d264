#include "core/eiet.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace eie {

static_assert(std::endian::native == std::endian::little,
              "eiet io assumes a little-endian host");

void save_eiet(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f.write("EIET", 4);
  const uint8_t version = 1;
  const uint8_t rank = static_cast<uint8_t>(t.rank());
  f.write(reinterpret_cast<const char*>(&version), 1);
  f.write(reinterpret_cast<const char*>(&rank), 1);
  for (int d : t.shape()) {
    const uint32_t dim = static_cast<uint32_t>(d);
    f.write(reinterpret_cast<const char*>(&dim), 4);
  }
  f.write(reinterpret_cast<const char*>(t.data().data()),
          static_cast<std::streamsize>(t.data().size() * sizeof(float)));
  if (!f) throw IoError("short write: " + path.string());
}

Tensor load_eiet(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path.string());
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "EIET", 4) != 0) {
    throw DataError("not an eiet file (bad magic): " + path.string());
  }
  uint8_t version = 0, rank = 0;
  f.read(reinterpret_cast<char*>(&version), 1);
  f.read(reinterpret_cast<char*>(&rank), 1);
  if (!f || version != 1) {
    throw DataError("unsupported eiet version " + std::to_string(version) + ": " + path.string());
  }
  Shape shape(rank);
  for (int i = 0; i < rank; ++i) {
    uint32_t dim = 0;
    f.read(reinterpret_cast<char*>(&dim), 4);
    if (!f || dim == 0) throw DataError("bad dimension in eiet header: " + path.string());
    shape[static_cast<size_t>(i)] = static_cast<int>(dim);
  }
  std::vector<float> data(static_cast<size_t>(shape_numel(shape)));
  f.read(reinterpret_cast<char*>(data.data()),
         static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!f) throw DataError("truncated eiet payload: " + path.string());
  char extra;
  if (f.read(&extra, 1)) throw DataError("trailing bytes in eiet file: " + path.string());
  return Tensor::from_data(std::move(shape), std::move(data));
}

}  // namespace eie
