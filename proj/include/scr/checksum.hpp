#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>

namespace scr {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

std::uint64_t fnv1a64(std::span<const std::byte> bytes, std::uint64_t seed = kFnvOffset);

// Checksum of a whole file; throws LoadError if it cannot be read.
std::uint64_t file_checksum(const std::filesystem::path& path);

}  // namespace scr
