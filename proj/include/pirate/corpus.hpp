#pragma once

#include <cstdint>
#include <vector>

#include "pirate/core.hpp"

namespace pirate {

// Synthetic clinical-note knowledge base. Every chunk is built around three
// invented key terms that make up most of its text; each key term is shared
// by a handful of chunks, so topics overlap the way a real corpus does.
// Deterministic in (chunks, seed).
std::vector<Chunk> generate_corpus(std::size_t chunks, std::uint64_t seed);

}  // namespace pirate
