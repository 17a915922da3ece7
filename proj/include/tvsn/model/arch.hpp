#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace tvsn::model {

// Every tensor shape of every network follows from this descriptor.
struct ArchDescriptor {
  int size = 64;
  int channels = 3;
  int encoding_dim = 17;
  std::vector<int> enc_widths{16, 32, 64, 128};  // stride-2 blocks, one per halving
  std::vector<int> dec_widths{64, 32, 16, 16};   // transposed blocks, one per doubling
  int bottleneck = 512;
  int embed = 128;
  std::vector<int> disc_widths{16, 32, 64, 128};
  std::vector<int> perc_widths{16, 32, 64};
  int perc_classes = 18;
  bool predict_background = false;

  int base_size() const { return size >> enc_widths.size(); }
  int decoder_seed_size() const { return enc_widths.back() * base_size() * base_size(); }

  nlohmann::json to_json() const;
  static ArchDescriptor from_json(const nlohmann::json& j);
  // Desk default at 64 px; larger powers of two add blocks at the widest width.
  static ArchDescriptor for_size(int size);
  void validate() const;

  bool operator==(const ArchDescriptor&) const = default;
};

}  // namespace tvsn::model
