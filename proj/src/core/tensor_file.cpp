#include "tvsn/core/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>

#include "tvsn/core/error.hpp"

namespace tvsn {

static_assert(std::endian::native == std::endian::little, "TVSN container assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'T', 'V', 'S', 'N'};

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint32_t get_u32(std::istream& in, const std::filesystem::path& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    fail(ErrorKind::Format, "truncated TVSN container: " + path.string());
  }
  return v;
}

std::size_t element_count(const std::vector<std::uint32_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

const TensorEntry* TensorFile::find(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

const TensorEntry& TensorFile::at(const std::string& name) const {
  const TensorEntry* e = find(name);
  if (e == nullptr) fail(ErrorKind::Lookup, "tensor entry not found: " + name);
  return *e;
}

void TensorFile::add(std::string name, std::vector<std::uint32_t> dims, std::vector<float> data) {
  if (element_count(dims) != data.size()) {
    fail(ErrorKind::Shape, "tensor entry '" + name + "' payload does not match its dims");
  }
  entries.push_back({std::move(name), std::move(dims), std::move(data)});
}

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open for writing: " + path.string());
  out.write(kMagic, 4);
  put_u32(out, TensorFile::kVersion);
  put_u32(out, static_cast<std::uint32_t>(file.meta.size()));
  out.write(file.meta.data(), static_cast<std::streamsize>(file.meta.size()));
  put_u32(out, static_cast<std::uint32_t>(file.entries.size()));
  for (const auto& e : file.entries) {
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put_u32(out, static_cast<std::uint32_t>(e.dims.size()));
    for (auto d : e.dims) put_u32(out, d);
    out.write(reinterpret_cast<const char*>(e.data.data()), static_cast<std::streamsize>(e.data.size() * sizeof(float)));
  }
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

TensorFile read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open for reading: " + path.string());
  char magic[4] = {};
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    fail(ErrorKind::Format, "not a TVSN container: " + path.string());
  }
  const std::uint32_t version = get_u32(in, path);
  if (version != TensorFile::kVersion) {
    fail(ErrorKind::Format, "unsupported TVSN version " + std::to_string(version) + ": " + path.string());
  }
  TensorFile file;
  file.meta.resize(get_u32(in, path));
  if (!in.read(file.meta.data(), static_cast<std::streamsize>(file.meta.size()))) {
    fail(ErrorKind::Format, "truncated TVSN metadata: " + path.string());
  }
  const std::uint32_t count = get_u32(in, path);
  file.entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    TensorEntry e;
    e.name.resize(get_u32(in, path));
    if (!in.read(e.name.data(), static_cast<std::streamsize>(e.name.size()))) {
      fail(ErrorKind::Format, "truncated TVSN entry name: " + path.string());
    }
    const std::uint32_t rank = get_u32(in, path);
    if (rank > 8) fail(ErrorKind::Format, "implausible rank in entry '" + e.name + "'");
    e.dims.resize(rank);
    for (auto& d : e.dims) d = get_u32(in, path);
    e.data.resize(element_count(e.dims));
    if (!in.read(reinterpret_cast<char*>(e.data.data()), static_cast<std::streamsize>(e.data.size() * sizeof(float)))) {
      fail(ErrorKind::Format, "truncated payload in entry '" + e.name + "'");
    }
    file.entries.push_back(std::move(e));
  }
  return file;
}

}  // namespace tvsn
