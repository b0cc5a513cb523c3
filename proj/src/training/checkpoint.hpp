#pragma once

#include <cstdint>
#include <string>

#include "numerics/param_store.hpp"

namespace sabrec::training {

// Versioned binary snapshot: magic "SABR", little-endian integers, a UTF-8
// config blob, then named tensors (name, dtype tag, dims, payload). Tensors
// round-trip bit-exactly in their stored precision; the 32-bit mode is lossy
// by design and meant for smaller artifacts.
struct Checkpoint {
  static constexpr uint32_t kVersion = 1;

  std::string config_json;
  numerics::ParamStore params;
  bool store_f32 = false;
};

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace sabrec::training
