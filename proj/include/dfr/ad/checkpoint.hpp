#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dfr/ad/tensor.hpp"

namespace dfr::ad {

// Flat binary container, little-endian:
//   magic "RCKPT1", then per parameter:
//   name length (u32), name bytes, rank (u32), dims (u32 each), payload (f64).
// Entries are written sorted by name; round-trips are bit-exact.
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Tensor*>>& params);

std::map<std::string, Tensor> load_checkpoint(const std::string& path);

}  // namespace dfr::ad
