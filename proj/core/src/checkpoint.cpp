#include "cognisnn/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace cognisnn {

namespace {

constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_f64(std::ostream& out, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

bool read_u32(std::istream& in, std::uint32_t& v) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
  v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
      (static_cast<std::uint32_t>(b[2]) << 16) |
      (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

bool read_f64(std::istream& in, double& d) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) return false;
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  std::memcpy(&d, &v, 8);
  return true;
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::map<std::string, Tensor>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataEmptyError("cannot open '" + path + "' for writing");
  out.write("CGSN", 4);
  write_u32(out, kVersion);
  for (const auto& [name, tensor] : entries) {  // std::map iterates sorted
    if (!tensor.defined())
      throw CorruptFileError("undefined tensor for '" + name + "'");
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<std::uint32_t>(tensor.rank()));
    for (int d : tensor.shape()) write_u32(out, static_cast<std::uint32_t>(d));
    for (double v : tensor.values()) write_f64(out, v);
  }
  if (!out) throw DataEmptyError("failed writing checkpoint '" + path + "'");
}

std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataEmptyError("cannot open checkpoint '" + path + "'");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "CGSN", 4) != 0)
    throw BadMagicError("'" + path + "' is not a parameter checkpoint");
  std::uint32_t version = 0;
  if (!read_u32(in, version) || version != kVersion)
    throw CorruptFileError("unsupported checkpoint version " +
                           std::to_string(version));
  std::map<std::string, Tensor> entries;
  std::string prev_name;
  while (true) {
    std::uint32_t name_len = 0;
    if (!read_u32(in, name_len)) break;  // clean EOF
    if (name_len == 0 || name_len > 4096)
      throw CorruptFileError("implausible name length in '" + path + "'");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len))
      throw CorruptFileError("truncated name in '" + path + "'");
    if (!prev_name.empty() && !(prev_name < name))
      throw CorruptFileError("checkpoint entries not sorted by name");
    prev_name = name;
    std::uint32_t rank = 0;
    if (!read_u32(in, rank) || rank > 8)
      throw CorruptFileError("bad rank for '" + name + "'");
    std::vector<int> shape(rank);
    std::int64_t count = 1;
    for (auto& d : shape) {
      std::uint32_t dim = 0;
      if (!read_u32(in, dim) || dim == 0 || dim > (1u << 24))
        throw CorruptFileError("bad dimension for '" + name + "'");
      d = static_cast<int>(dim);
      count *= d;
    }
    std::vector<double> values(static_cast<size_t>(count));
    for (auto& v : values)
      if (!read_f64(in, v))
        throw CorruptFileError("truncated payload for '" + name + "'");
    entries.emplace(name, Tensor::from(std::move(shape), std::move(values)));
  }
  if (entries.empty())
    throw CorruptFileError("checkpoint '" + path + "' holds no parameters");
  return entries;
}

}  // namespace cognisnn
