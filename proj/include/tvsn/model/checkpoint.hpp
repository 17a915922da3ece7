#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "tvsn/autodiff/graph.hpp"
#include "tvsn/core/tensor_file.hpp"
#include "tvsn/model/arch.hpp"

namespace tvsn::model {

struct Checkpoint {
  ArchDescriptor arch;
  ad::ParameterStore params;
  nlohmann::json meta;  // free-form training state (stage, step counters, config)
  TensorFile file;      // raw container, for extra entries such as optimizer state
};

// Writes parameters whose names start with one of `prefixes` (all when empty),
// any `extra` entries, and a JSON sidecar next to the container.
void save_checkpoint(const std::filesystem::path& path, const ArchDescriptor& arch, const ad::ParameterStore& params,
                     const nlohmann::json& meta, const std::vector<std::string>& prefixes = {},
                     const std::vector<TensorEntry>& extra = {});

// Entries named "param/<name>" become parameters; everything else stays in `file`.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies every parameter of `from` with a matching prefix into `to`, adding
// missing ones. Shape mismatches raise shape errors.
void copy_params(const ad::ParameterStore& from, ad::ParameterStore& to, const std::string& prefix);

std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint);

}  // namespace tvsn::model
