#pragma once

#include <filesystem>
#include <string>

#include "cotrl/policy.hpp"

namespace cotrl {

/// Binary layout, all little-endian:
///   8 bytes  tag "COTRLCK1"
///   4 x i32  vocab, embed, features, value_hidden
///   u64      vocabulary hash
///   u64      parameter count
///   f64[]    parameters in PolicyParams order
/// A JSON manifest with the same header fields and the tensor table is
/// written next to it as `<path>.json`.
void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params, const Vocabulary& vocab,
                     const std::string& task);

/// Throws std::runtime_error on a malformed file and UsageError when the
/// vocabulary hash does not match `vocab`.
PolicyParams load_checkpoint(const std::filesystem::path& path, const Vocabulary& vocab);

}  // namespace cotrl
