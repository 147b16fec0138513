#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cotrl/env.hpp"

namespace cotrl {

/// Splits text into vocabulary pieces: JSON keys and structural runs first,
/// then an optional single leading space followed by a letter run, a digit
/// run, or one character (a whole UTF-8 sequence).
std::vector<std::string> split_pieces(std::string_view text);

/// Fixed token inventory for one task. Id 0 is the begin marker, id 1 the end
/// marker; both detokenize to the empty string.
class Vocabulary {
 public:
  static constexpr int kBos = 0;
  static constexpr int kEos = 1;

  /// `pieces` must not contain duplicates; markers are prepended.
  explicit Vocabulary(std::vector<std::string> pieces);

  /// Everything the task's prompts and oracle responses can contain.
  static Vocabulary for_task(TaskId task, const EnvOptions& options = {});

  int size() const { return static_cast<int>(names_.size()); }
  /// Display name: the piece itself, or "<bos>" / "<eos>".
  const std::string& name(int id) const { return names_.at(id); }
  /// Detokenized text of one token.
  const std::string& piece(int id) const;
  std::optional<int> find(std::string_view piece) const;

  /// Throws UsageError on text containing a piece outside the vocabulary.
  std::vector<int> encode(std::string_view text) const;
  std::optional<std::vector<int>> try_encode(std::string_view text) const;
  std::string decode(std::span<const int> ids) const;

  /// FNV-1a over the ordered token names; identifies checkpoint compatibility.
  std::uint64_t hash() const;
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace cotrl
