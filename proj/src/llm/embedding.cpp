#include "protoagent/llm/embedding.hpp"

#include <cctype>

#include "protoagent/error.hpp"

namespace protoagent {
namespace {

bool token_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

HashingEmbedder::HashingEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim_ == 0) throw Error(ErrorCode::PreconditionFailed, "embedding dimension must be positive");
}

std::vector<std::string> HashingEmbedder::tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (token_byte(c)) {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

EmbeddingVector HashingEmbedder::embed(std::string_view text) {
  if (text.empty()) throw Error(ErrorCode::PreconditionFailed, "cannot embed empty text");
  EmbeddingVector v{std::vector<double>(dim_, 0.0), model_id()};
  for (const auto& token : tokenize(text)) {
    const std::uint64_t h = splitmix(fnv1a(token) ^ seed_);
    v.values[h % dim_] += (h >> 63) ? -1.0 : 1.0;
  }
  return v;
}

std::string HashingEmbedder::model_id() const {
  std::string id = "hashing-bow-" + std::to_string(dim_);
  if (seed_ != kDefaultSeed) id += "-seed" + std::to_string(seed_);
  return id;
}

}  // namespace protoagent
