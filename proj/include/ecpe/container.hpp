#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ecpe/tensor.hpp"

namespace ecpe {

// Binary tensor container shared by model and filter checkpoints:
// magic "ECPECNT1", u64 metadata length, metadata (JSON text, owned by the
// caller), u64 tensor count, then per tensor: u64 name length, name,
// u64 rows, u64 cols, rows*cols raw doubles. Integers and doubles are
// little-endian; round trips are bit-exact.
struct NamedMat {
  std::string name;
  Mat m;
};

void write_container(const std::filesystem::path& path, const std::string& meta,
                     const std::vector<std::pair<std::string, const Mat*>>& tensors);

// Returns the metadata text.
std::string read_container(const std::filesystem::path& path,
                           std::vector<NamedMat>& tensors);

}  // namespace ecpe
