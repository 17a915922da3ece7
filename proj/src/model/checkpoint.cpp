#include "tvsn/model/checkpoint.hpp"

#include <fstream>

#include "tvsn/core/error.hpp"

namespace tvsn::model {

namespace {
constexpr const char* kParamPrefix = "param/";
}

std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint) {
  std::filesystem::path p = checkpoint;
  p += ".json";
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const ArchDescriptor& arch, const ad::ParameterStore& params,
                     const nlohmann::json& meta, const std::vector<std::string>& prefixes,
                     const std::vector<TensorEntry>& extra) {
  TensorFile f;
  nlohmann::json m = meta;
  m["arch"] = arch.to_json();
  f.meta = m.dump();
  for (const auto& p : params.all()) {
    bool keep = prefixes.empty();
    for (const auto& pre : prefixes) keep = keep || p.name.starts_with(pre);
    if (!keep) continue;
    std::vector<std::uint32_t> dims;
    for (int d : p.value.shape().dims()) dims.push_back(static_cast<std::uint32_t>(d));
    f.add(kParamPrefix + p.name, dims, {p.value.storage().begin(), p.value.storage().end()});
  }
  for (const auto& e : extra) f.entries.push_back(e);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  write_tensor_file(tmp, f);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::Io, "cannot move checkpoint into place at " + path.string() + ": " + ec.message());

  std::ofstream side(sidecar_path(path));
  if (!side) fail(ErrorKind::Io, "cannot write " + sidecar_path(path).string());
  side << m.dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Checkpoint c;
  c.file = read_tensor_file(path);
  try {
    c.meta = nlohmann::json::parse(c.file.meta);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, path.string() + ": checkpoint metadata: " + e.what());
  }
  if (!c.meta.contains("arch")) fail(ErrorKind::Format, path.string() + ": checkpoint has no architecture descriptor");
  c.arch = ArchDescriptor::from_json(c.meta.at("arch"));
  std::vector<TensorEntry> rest;
  for (auto& e : c.file.entries) {
    if (!e.name.starts_with(kParamPrefix)) {
      rest.push_back(std::move(e));
      continue;
    }
    std::vector<int> dims;
    for (auto d : e.dims) dims.push_back(static_cast<int>(d));
    c.params.add(e.name.substr(std::char_traits<char>::length(kParamPrefix)),
                 ad::Tensor(ad::Shape(dims), std::move(e.data)));
  }
  c.file.entries = std::move(rest);
  return c;
}

void copy_params(const ad::ParameterStore& from, ad::ParameterStore& to, const std::string& prefix) {
  for (const auto& p : from.all()) {
    if (!p.name.starts_with(prefix)) continue;
    if (!to.contains(p.name)) {
      to.add(p.name, p.value, p.frozen);
      continue;
    }
    auto& dst = to.get(p.name);
    if (!(dst.value.shape() == p.value.shape())) {
      fail(ErrorKind::Shape, "parameter " + p.name + ": checkpoint shape " + p.value.shape().str() +
                                 " vs model shape " + dst.value.shape().str());
    }
    dst.value = p.value;
  }
}

}  // namespace tvsn::model
