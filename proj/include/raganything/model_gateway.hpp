#pragma once

#include <condition_variable>
#include <cstddef>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "raganything/content_model.hpp"
#include "raganything/prompts.hpp"

namespace raganything {

enum class Backend { http, stub };

struct ModelProfile {
  Backend backend = Backend::stub;
  std::string endpoint_url;  // required for http, e.g. "http://host:8000/v1"
  std::string model_name = "stub";
  std::string api_key_env = "OPENAI_API_KEY";
  double timeout_s = 60.0;
  int max_retries = 2;
  // http default per the embedding model in use; the stub embedder always
  // hashes into 256 buckets.
  int embedding_dim = 3072;
};

inline constexpr int kStubEmbeddingDim = 256;

struct Embedding {
  std::vector<double> vector;
  int dim = 0;

  bool operator==(const Embedding&) const = default;
};

struct EntitySummary {
  std::string entity_name;
  std::string entity_type;
  std::string summary;

  bool operator==(const EntitySummary&) const = default;
};

struct ChatMessage {
  std::string role;
  std::string text;
  std::vector<std::string> image_refs;  // data URLs or http(s) URLs
};

// Uniform access to chat, vision, embedding and rerank capabilities.
// Stateless per call; the only shared state is a max-in-flight limiter on
// HTTP requests. RAG_ANYTHING_OFFLINE=1 forces stub backends globally.
class ModelGateway {
 public:
  explicit ModelGateway(std::size_t max_in_flight = 8);

  std::pair<std::string, EntitySummary> describe_multimodal(
      const ContentUnit& unit, const ContextWindow& window,
      const ModelProfile& profile);

  std::vector<Embedding> embed_batch(const std::vector<std::string>& texts,
                                     const ModelProfile& profile);

  // Scores in [0,1], descending; ties broken by lower original index.
  std::vector<std::pair<std::size_t, double>> rerank(
      const std::string& query, const std::vector<std::string>& passages,
      const ModelProfile& profile);

  std::string generate(const std::vector<ChatMessage>& messages,
                       const ModelProfile& profile);

  static bool offline();
  static Backend effective_backend(const ModelProfile& profile);

  // Deterministic stub embedding: feature hashing at kStubEmbeddingDim,
  // L2-normalized. Exposed so rerank tests can oracle against it.
  static Embedding stub_embed(const std::string& text);

 private:
  std::string chat_http(const std::vector<ChatMessage>& messages,
                        const ModelProfile& profile);
  std::vector<Embedding> embed_http(const std::vector<std::string>& texts,
                                    const ModelProfile& profile);

  class InFlightGuard;
  std::size_t max_in_flight_;
  std::size_t in_flight_ = 0;
  std::mutex mu_;
  std::condition_variable cv_;
};

double cosine(const Embedding& a, const Embedding& b);

}  // namespace raganything
