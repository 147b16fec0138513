#include "cotrl/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cotrl {

namespace {

constexpr std::array<char, 8> kTag{'C', 'O', 'T', 'R', 'L', 'C', 'K', '1'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.write(buf, sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  char buf[sizeof(T)];
  if (!in.read(buf, sizeof(T))) throw std::runtime_error("truncated checkpoint");
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << v;
  return s.str();
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params, const Vocabulary& vocab,
                     const std::string& task) {
  if (vocab.size() != params.dims().vocab) throw UsageError("vocabulary does not match the policy");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(kTag.data(), kTag.size());
    const auto& d = params.dims();
    for (int v : {d.vocab, d.embed, d.features, d.value_hidden}) put<std::int32_t>(out, v);
    put<std::uint64_t>(out, vocab.hash());
    put<std::uint64_t>(out, params.size());
    for (double w : params.data()) put<double>(out, w);
    if (!out) throw std::runtime_error("failed writing " + path.string());
  }

  nlohmann::json manifest;
  manifest["format"] = std::string(kTag.begin(), kTag.end());
  manifest["task"] = task;
  manifest["dims"] = {{"vocab", params.dims().vocab},
                      {"embed", params.dims().embed},
                      {"features", params.dims().features},
                      {"value_hidden", params.dims().value_hidden}};
  manifest["vocab_hash"] = hex64(vocab.hash());
  manifest["parameters"] = params.size();
  for (const auto& s : params.slots()) {
    manifest["tensors"].push_back({{"name", s.name}, {"offset", s.offset}, {"rows", s.rows}, {"cols", s.cols}});
  }
  std::ofstream side(path.string() + ".json");
  side << manifest.dump(2) << "\n";
}

PolicyParams load_checkpoint(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::array<char, 8> tag{};
  if (!in.read(tag.data(), tag.size()) || tag != kTag) throw std::runtime_error("not a checkpoint: " + path.string());
  PolicyDims dims;
  dims.vocab = get<std::int32_t>(in);
  dims.embed = get<std::int32_t>(in);
  dims.features = get<std::int32_t>(in);
  dims.value_hidden = get<std::int32_t>(in);
  const auto hash = get<std::uint64_t>(in);
  const auto count = get<std::uint64_t>(in);
  if (hash != vocab.hash() || dims.vocab != vocab.size()) {
    throw UsageError("checkpoint vocabulary " + hex64(hash) + " does not match " + hex64(vocab.hash()));
  }
  PolicyParams params(dims);
  if (count != params.size()) throw std::runtime_error("checkpoint parameter count mismatch");
  for (double& w : params.data()) w = get<double>(in);
  return params;
}

}  // namespace cotrl
