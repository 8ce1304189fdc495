#include "morphoqg/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

namespace morphoqg {

namespace {

constexpr char kMagic[4] = {'M', 'Q', 'G', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError("checkpoint truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max())
    throw DataError(std::string(what) + " does not fit in u32");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_checkpoint(std::ostream& out, const ParameterStore<float>& store) {
  out.write(kMagic, 4);
  put_u32(out, checked_u32(store.size(), "tensor count"));
  for (const auto& [name, p] : store) {
    put_u32(out, checked_u32(name.size(), "name length"));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, checked_u32(p.value.rank(), "rank"));
    for (std::size_t d : p.value.dims()) put_u32(out, checked_u32(d, "dimension"));
    for (float v : p.value.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  if (!out) throw FileError("checkpoint write failed");
}

ParameterStore<float> read_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic))
    throw DataError("not a checkpoint (bad magic)");
  ParameterStore<float> store;
  const std::uint32_t count = get_u32(in);
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::uint32_t name_len = get_u32(in);
    if (name_len > (1u << 16)) throw DataError("checkpoint name length implausible");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw DataError("checkpoint truncated");
    const std::uint32_t rank = get_u32(in);
    if (rank > 8) throw DataError("checkpoint rank implausible");
    std::vector<std::size_t> dims(rank);
    std::size_t n = 1;
    for (auto& d : dims) {
      d = get_u32(in);
      n *= d;
    }
    std::vector<float> data(n);
    for (float& v : data) v = std::bit_cast<float>(get_u32(in));
    store.add(name, Tensor<float>(std::move(dims), std::move(data)));
  }
  return store;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterStore<float>& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write " + path.string());
  write_checkpoint(out, store);
}

ParameterStore<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace morphoqg
