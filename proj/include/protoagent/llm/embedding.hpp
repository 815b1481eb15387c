#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace protoagent {

struct EmbeddingVector {
  std::vector<double> values;
  std::string model_id;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingVector embed(std::string_view text) = 0;
  virtual std::string model_id() const = 0;
};

/// Signed feature-hashing bag of words. Tokens are maximal runs of ASCII
/// letters/digits or non-ASCII bytes, lowercased; each adds +-1 to one of
/// `dim` buckets chosen by a seeded FNV-1a hash.
class HashingEmbedder : public Embedder {
 public:
  static constexpr std::size_t kDefaultDim = 256;
  static constexpr std::uint64_t kDefaultSeed = 0x5eedULL;

  explicit HashingEmbedder(std::size_t dim = kDefaultDim, std::uint64_t seed = kDefaultSeed);

  EmbeddingVector embed(std::string_view text) override;
  std::string model_id() const override;

  static std::vector<std::string> tokenize(std::string_view text);

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

}  // namespace protoagent
