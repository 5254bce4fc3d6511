#include "tsroute/random.hpp"

#include <vector>

namespace tsroute {

namespace {

std::seed_seq make_seed_seq(std::uint64_t seed, std::string_view label,
                            std::vector<std::uint32_t>& words) {
  words.clear();
  words.push_back(static_cast<std::uint32_t>(seed));
  words.push_back(static_cast<std::uint32_t>(seed >> 32));
  for (char c : label) words.push_back(static_cast<unsigned char>(c));
  return std::seed_seq(words.begin(), words.end());
}

}  // namespace

Rng make_stream(std::uint64_t seed, std::string_view label) {
  std::vector<std::uint32_t> words;
  auto seq = make_seed_seq(seed, label, words);
  return Rng(seq);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  std::vector<std::uint32_t> words;
  auto seq = make_seed_seq(seed, label, words);
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

}  // namespace tsroute
