#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tvsn {

// One named float array inside a TVSN container.
struct TensorEntry {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

// Binary container layout (all integers u32 little-endian):
//   "TVSN" | version | meta_len | meta bytes (UTF-8 JSON, may be empty) | entry_count
//   per entry: name_len | name | rank | dims[rank] | f32 LE payload
struct TensorFile {
  static constexpr std::uint32_t kVersion = 1;

  std::string meta;
  std::vector<TensorEntry> entries;

  const TensorEntry* find(const std::string& name) const;
  const TensorEntry& at(const std::string& name) const;
  void add(std::string name, std::vector<std::uint32_t> dims, std::vector<float> data);
};

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file);
TensorFile read_tensor_file(const std::filesystem::path& path);

}  // namespace tvsn
