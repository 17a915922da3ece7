#pragma once

#include "support.hpp"
#include "tvsn/data/dataset.hpp"

namespace testing {

// One procedural car, elevation 20, azimuths 0..280 in steps of 40, 64 px.
inline tvsn::data::ViewSpec tiny_spec() {
  tvsn::data::ViewSpec spec;
  spec.elevations = {20.0};
  spec.azimuth_step = 40.0;
  spec.azimuth_count = 8;
  spec.size = 64;
  return spec;
}

// Generated once per test binary.
inline const std::filesystem::path& tiny_dataset() {
  static TempDir dir("tiny");
  static const bool made = [] {
    tvsn::data::GenerateOptions opt;
    opt.threads = 1;
    tvsn::data::generate_dataset({tvsn::data::procedural_source(0, "car-like")}, tiny_spec(), dir.path(), opt);
    return true;
  }();
  (void)made;
  return dir.path();
}

}  // namespace testing
