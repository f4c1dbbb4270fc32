#pragma once

#include <filesystem>

#include "uf/net.hpp"

namespace uf {

// Binary checkpoint, little-endian throughout:
//   magic "UFGR", version u32 = 1,
//   config block: scales u32, dilation u32, padding u8 (0 valid / 1 same),
//   fusion u8 (0 concat / 1 sum),
//   parameter count u32, then per parameter:
//     name length u16, UTF-8 name, rank u8, extents u32 each, f32 payload,
//   trailing CRC-32 of all preceding bytes.
// Running statistics are stored alongside the learned parameters so a
// round-trip reproduces eval-mode outputs bit for bit.
void save_checkpoint(const Model& m, const std::filesystem::path& path);

Model load_checkpoint(const std::filesystem::path& path);

}  // namespace uf
