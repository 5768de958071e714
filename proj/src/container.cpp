#include "ecpe/container.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "ecpe/error.hpp"

namespace ecpe {

namespace {

constexpr char kMagic[8] = {'E', 'C', 'P', 'E', 'C', 'N', 'T', '1'};

static_assert(std::endian::native == std::endian::little,
              "container IO assumes a little-endian host");

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::istream& in, const std::string& path) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw DataError(path + ": truncated container");
  return v;
}

}  // namespace

void write_container(const std::filesystem::path& path, const std::string& meta,
                     const std::vector<std::pair<std::string, const Mat*>>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  out.write(kMagic, sizeof kMagic);
  write_u64(out, meta.size());
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  write_u64(out, tensors.size());
  for (const auto& [name, m] : tensors) {
    write_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(out, m->rows);
    write_u64(out, m->cols);
    out.write(reinterpret_cast<const char*>(m->data()),
              static_cast<std::streamsize>(m->size() * sizeof(double)));
  }
  if (!out) throw DataError("failed writing file: " + path.string());
}

std::string read_container(const std::filesystem::path& path,
                           std::vector<NamedMat>& tensors) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  char magic[8] = {};
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw DataError(path.string() + ": not a checkpoint container");

  const std::uint64_t meta_len = read_u64(in, path.string());
  std::string meta(meta_len, '\0');
  in.read(meta.data(), static_cast<std::streamsize>(meta_len));
  if (!in) throw DataError(path.string() + ": truncated container");

  const std::uint64_t n = read_u64(in, path.string());
  tensors.clear();
  tensors.reserve(n);
  for (std::uint64_t k = 0; k < n; ++k) {
    NamedMat t;
    const std::uint64_t name_len = read_u64(in, path.string());
    t.name.assign(name_len, '\0');
    in.read(t.name.data(), static_cast<std::streamsize>(name_len));
    const std::uint64_t rows = read_u64(in, path.string());
    const std::uint64_t cols = read_u64(in, path.string());
    t.m = Mat(rows, cols);
    in.read(reinterpret_cast<char*>(t.m.data()),
            static_cast<std::streamsize>(t.m.size() * sizeof(double)));
    if (!in) throw DataError(path.string() + ": truncated container");
    tensors.push_back(std::move(t));
  }
  return meta;
}

}  // namespace ecpe
