#pragma once

#include <string>

#include "protoagent/llm/chat.hpp"
#include "protoagent/llm/embedding.hpp"

namespace protoagent {

struct HttpEndpoint {
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string model;
  std::string api_key;
  int timeout_seconds = 120;
};

/// OpenAI-compatible /chat/completions client.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

  ChatMessage complete(const std::vector<ChatMessage>& messages, const std::vector<ToolSchema>& tools,
                       const ChatParams& params) override;

 private:
  HttpEndpoint endpoint_;
};

/// OpenAI-compatible /embeddings client.
class HttpEmbedder : public Embedder {
 public:
  explicit HttpEmbedder(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

  EmbeddingVector embed(std::string_view text) override;
  std::string model_id() const override { return endpoint_.model; }

 private:
  HttpEndpoint endpoint_;
};

}  // namespace protoagent
