#include "raganything/model_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "raganything/errors.hpp"
#include "raganything/text_utils.hpp"

namespace raganything {

using nlohmann::json;

namespace {

struct SplitUrl {
  std::string host;  // scheme://host[:port]
  std::string base;  // path prefix, no trailing slash
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ModelTransportError("endpoint_url must include a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string base = url.substr(path_start);
  while (!base.empty() && base.back() == '/') base.pop_back();
  return {url.substr(0, path_start), base};
}

// Models occasionally wrap JSON in prose or code fences; take the
// outermost object.
json parse_reply_json(const std::string& reply) {
  auto b = reply.find('{');
  auto e = reply.rfind('}');
  if (b == std::string::npos || e == std::string::npos || e < b)
    throw MalformedReplyError("no JSON object in model reply");
  try {
    return json::parse(reply.substr(b, e - b + 1));
  } catch (const json::parse_error& err) {
    throw MalformedReplyError(std::string("reply JSON parse: ") + err.what());
  }
}

std::string window_context_text(const ContextWindow& window) {
  std::string out;
  for (const auto& m : window.members) {
    if (m.index == window.center) continue;
    std::string t = payload_text(m);
    if (t.empty()) continue;
    if (!out.empty()) out += "\n";
    out += t;
  }
  return out;
}

PromptKind prompt_for_modality(ModalityType m) {
  switch (m) {
    case ModalityType::table: return PromptKind::table;
    case ModalityType::equation: return PromptKind::equation;
    default: return PromptKind::vision;
  }
}

const std::optional<std::string>* payload_caption(const ContentUnit& unit) {
  if (const auto* img = std::get_if<ImagePayload>(&unit.content))
    return &img->caption;
  if (const auto* tab = std::get_if<TablePayload>(&unit.content))
    return &tab->caption;
  return nullptr;
}

// Deterministic verdict for judge prompts under the stub backend:
// correct iff the answer contains the reference string.
std::string stub_judge_reply(const std::string& prompt) {
  auto ref_pos = prompt.find("Reference:\n");
  auto ans_pos = prompt.find("\nAnswer:\n");
  if (ref_pos == std::string::npos || ans_pos == std::string::npos ||
      ans_pos < ref_pos)
    throw MalformedReplyError("stub judge: prompt missing sections");
  ref_pos += std::string("Reference:\n").size();
  std::string reference = prompt.substr(ref_pos, ans_pos - ref_pos);
  std::string answer = prompt.substr(ans_pos + std::string("\nAnswer:\n").size());
  while (!answer.empty() && std::isspace(static_cast<unsigned char>(answer.back())))
    answer.pop_back();
  bool correct = !reference.empty() &&
                 answer.find(reference) != std::string::npos;
  json j;
  j["correct"] = correct;
  j["reason"] = correct ? "answer contains the reference"
                        : "answer does not contain the reference";
  return j.dump();
}

}  // namespace

double cosine(const Embedding& a, const Embedding& b) {
  if (a.dim != b.dim || a.dim == 0)
    throw DimMismatchError("cosine: dims " + std::to_string(a.dim) + " vs " +
                           std::to_string(b.dim));
  double dot = 0, na = 0, nb = 0;
  for (int i = 0; i < a.dim; ++i) {
    dot += static_cast<double>(a.vector[i]) * b.vector[i];
    na += static_cast<double>(a.vector[i]) * a.vector[i];
    nb += static_cast<double>(b.vector[i]) * b.vector[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

class ModelGateway::InFlightGuard {
 public:
  explicit InFlightGuard(ModelGateway& g) : g_(g) {
    std::unique_lock lock(g_.mu_);
    g_.cv_.wait(lock, [&] { return g_.in_flight_ < g_.max_in_flight_; });
    ++g_.in_flight_;
  }
  ~InFlightGuard() {
    {
      std::lock_guard lock(g_.mu_);
      --g_.in_flight_;
    }
    g_.cv_.notify_one();
  }

 private:
  ModelGateway& g_;
};

ModelGateway::ModelGateway(std::size_t max_in_flight)
    : max_in_flight_(max_in_flight == 0 ? 1 : max_in_flight) {}

bool ModelGateway::offline() {
  const char* v = std::getenv("RAG_ANYTHING_OFFLINE");
  return v != nullptr && std::string(v) == "1";
}

Backend ModelGateway::effective_backend(const ModelProfile& profile) {
  if (offline()) return Backend::stub;
  return profile.backend;
}

Embedding ModelGateway::stub_embed(const std::string& text) {
  Embedding e;
  e.dim = kStubEmbeddingDim;
  e.vector.assign(kStubEmbeddingDim, 0.0);
  for (const auto& tok : text::tokenize(text))
    e.vector[text::fnv1a(tok) % kStubEmbeddingDim] += 1.0;
  double norm = 0;
  for (double v : e.vector) norm += v * v;
  norm = std::sqrt(norm);
  if (norm > 0)
    for (double& v : e.vector) v /= norm;
  return e;
}

std::vector<Embedding> ModelGateway::embed_batch(
    const std::vector<std::string>& texts, const ModelProfile& profile) {
  if (texts.empty()) throw EmptyInputError("embed_batch: empty batch");
  for (const auto& t : texts)
    if (text::is_blank(t))
      throw EmptyInputError("embed_batch: blank text in batch");

  if (effective_backend(profile) == Backend::stub) {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(stub_embed(t));
    return out;
  }
  return embed_http(texts, profile);
}

std::vector<std::pair<std::size_t, double>> ModelGateway::rerank(
    const std::string& query, const std::vector<std::string>& passages,
    const ModelProfile& profile) {
  if (passages.empty()) throw EmptyInputError("rerank: no passages");

  std::vector<std::pair<std::size_t, double>> scored;
  if (effective_backend(profile) == Backend::stub) {
    Embedding q = stub_embed(query);
    for (std::size_t i = 0; i < passages.size(); ++i) {
      double s = std::clamp(cosine(q, stub_embed(passages[i])), 0.0, 1.0);
      scored.emplace_back(i, s);
    }
  } else {
    // OpenAI-compatible rerank endpoint (bge-style servers expose
    // POST /rerank with {query, documents}).
    SplitUrl url = split_url(profile.endpoint_url);
    json body;
    body["model"] = profile.model_name;
    body["query"] = query;
    body["documents"] = passages;
    InFlightGuard guard(*this);
    httplib::Client cli(url.host);
    cli.set_read_timeout(std::chrono::duration<double>(profile.timeout_s));
    httplib::Headers headers;
    if (const char* key = std::getenv(profile.api_key_env.c_str()))
      headers.emplace("Authorization", std::string("Bearer ") + key);
    std::string last_error;
    for (int attempt = 0; attempt <= profile.max_retries; ++attempt) {
      auto res = cli.Post((url.base + "/rerank").c_str(), headers, body.dump(),
                          "application/json");
      if (res && res->status == 200) {
        json j = json::parse(res->body);
        for (const auto& r : j["results"]) {
          scored.emplace_back(r["index"].get<std::size_t>(),
                              std::clamp(r["relevance_score"].get<double>(),
                                         0.0, 1.0));
        }
        break;
      }
      last_error = res ? "HTTP " + std::to_string(res->status)
                       : httplib::to_string(res.error());
      if (attempt == profile.max_retries)
        throw ModelTransportError("rerank: " + last_error);
      std::this_thread::sleep_for(std::chrono::milliseconds(100 * (attempt + 1)));
    }
  }

  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return scored;
}

std::string ModelGateway::generate(const std::vector<ChatMessage>& messages,
                                   const ModelProfile& profile) {
  bool has_user = std::any_of(messages.begin(), messages.end(),
                              [](const auto& m) { return m.role == "user"; });
  if (!has_user) throw EmptyInputError("generate: no user message");

  if (effective_backend(profile) == Backend::stub) {
    for (const auto& m : messages)
      if (m.text.find(kJudgeMarker) != std::string::npos)
        return stub_judge_reply(m.text);
    std::string digest_input;
    for (const auto& m : messages) {
      digest_input += m.role + "\x1f" + m.text + "\x1f";
      for (const auto& r : m.image_refs) digest_input += r + "\x1e";
    }
    return "stub-reply:" + text::fnv1a_hex(digest_input);
  }
  return chat_http(messages, profile);
}

std::pair<std::string, EntitySummary> ModelGateway::describe_multimodal(
    const ContentUnit& unit, const ContextWindow& window,
    const ModelProfile& profile) {
  if (unit.modality == ModalityType::text)
    throw EmptyInputError("describe_multimodal: text units need no description");
  if (window.center != unit.index)
    throw UnitIndexError("describe_multimodal: window center " +
                         std::to_string(window.center) + " != unit index " +
                         std::to_string(unit.index));

  const std::string context = window_context_text(window);

  if (effective_backend(profile) == Backend::stub) {
    std::string description =
        "[" + to_string(unit.modality) + " " + unit.unit_id + "] " +
        payload_text(unit);
    if (!context.empty()) description += "\nContext: " + context;

    EntitySummary summary;
    const auto* caption = payload_caption(unit);
    if (caption && *caption && !(*caption)->empty())
      summary.entity_name = **caption;
    else
      summary.entity_name = "unit:" + unit.unit_id;
    summary.entity_type = to_string(unit.modality);
    std::string body = payload_text(unit);
    summary.summary = body.empty() ? unit.unit_id : body;
    return {description, summary};
  }

  SlotMap slots{{"content", payload_text(unit)}, {"context", context}};
  std::string prompt = render_prompt(prompt_for_modality(unit.modality), slots);

  std::vector<ChatMessage> messages;
  ChatMessage user{"user", prompt, {}};
  if (const auto* img = std::get_if<ImagePayload>(&unit.content))
    user.image_refs.push_back(img->image_ref);
  messages.push_back(std::move(user));

  std::string reply = chat_http(messages, profile);
  json j;
  try {
    j = parse_reply_json(reply);
  } catch (const MalformedReplyError&) {
    messages.push_back({"assistant", reply, {}});
    messages.push_back({"user", "Return only valid JSON.", {}});
    reply = chat_http(messages, profile);
    j = parse_reply_json(reply);  // surfaces MalformedReplyError if repair fails
  }
  if (!j.contains("description") || !j["description"].is_string())
    throw MalformedReplyError("describe_multimodal: missing 'description'");
  EntitySummary summary;
  summary.entity_name = j.value("entity_name", "unit:" + unit.unit_id);
  summary.entity_type = j.value("entity_type", to_string(unit.modality));
  summary.summary = j.value("summary", "");
  if (summary.entity_name.empty()) summary.entity_name = "unit:" + unit.unit_id;
  return {j["description"].get<std::string>(), summary};
}

std::string ModelGateway::chat_http(const std::vector<ChatMessage>& messages,
                                    const ModelProfile& profile) {
  if (profile.endpoint_url.empty())
    throw ModelTransportError("http backend requires endpoint_url");
  SplitUrl url = split_url(profile.endpoint_url);

  json body;
  body["model"] = profile.model_name;
  body["messages"] = json::array();
  for (const auto& m : messages) {
    json jm;
    jm["role"] = m.role;
    if (m.image_refs.empty()) {
      jm["content"] = m.text;
    } else {
      json parts = json::array();
      parts.push_back({{"type", "text"}, {"text", m.text}});
      for (const auto& r : m.image_refs)
        parts.push_back({{"type", "image_url"}, {"image_url", {{"url", r}}}});
      jm["content"] = std::move(parts);
    }
    body["messages"].push_back(std::move(jm));
  }

  InFlightGuard guard(*this);
  httplib::Client cli(url.host);
  cli.set_read_timeout(std::chrono::duration<double>(profile.timeout_s));
  httplib::Headers headers;
  if (const char* key = std::getenv(profile.api_key_env.c_str()))
    headers.emplace("Authorization", std::string("Bearer ") + key);

  std::string last_error;
  for (int attempt = 0; attempt <= profile.max_retries; ++attempt) {
    auto res = cli.Post((url.base + "/chat/completions").c_str(), headers,
                        body.dump(), "application/json");
    if (res) {
      if (res->status == 200) {
        try {
          json j = json::parse(res->body);
          return j["choices"].at(0)["message"]["content"].get<std::string>();
        } catch (const std::exception& e) {
          throw MalformedReplyError(std::string("chat response: ") + e.what());
        }
      }
      if (res->status == 413 || res->status == 400) {
        // Providers signal oversize payloads either way; do not retry.
        throw ContextTooLargeError("provider rejected payload: HTTP " +
                                   std::to_string(res->status) + " " +
                                   res->body.substr(0, 200));
      }
      last_error = "HTTP " + std::to_string(res->status);
    } else {
      last_error = httplib::to_string(res.error());
    }
    if (attempt < profile.max_retries)
      std::this_thread::sleep_for(std::chrono::milliseconds(200 * (attempt + 1)));
  }
  throw ModelTransportError("chat: " + last_error);
}

std::vector<Embedding> ModelGateway::embed_http(
    const std::vector<std::string>& texts, const ModelProfile& profile) {
  if (profile.endpoint_url.empty())
    throw ModelTransportError("http backend requires endpoint_url");
  SplitUrl url = split_url(profile.endpoint_url);

  json body;
  body["model"] = profile.model_name;
  body["input"] = texts;

  InFlightGuard guard(*this);
  httplib::Client cli(url.host);
  cli.set_read_timeout(std::chrono::duration<double>(profile.timeout_s));
  httplib::Headers headers;
  if (const char* key = std::getenv(profile.api_key_env.c_str()))
    headers.emplace("Authorization", std::string("Bearer ") + key);

  std::string last_error;
  for (int attempt = 0; attempt <= profile.max_retries; ++attempt) {
    auto res = cli.Post((url.base + "/embeddings").c_str(), headers,
                        body.dump(), "application/json");
    if (res && res->status == 200) {
      json j = json::parse(res->body);
      std::vector<Embedding> out(texts.size());
      for (const auto& item : j["data"]) {
        std::size_t idx = item["index"].get<std::size_t>();
        Embedding e;
        for (const auto& v : item["embedding"])
          e.vector.push_back(v.get<double>());
        e.dim = static_cast<int>(e.vector.size());
        double norm = 0;
        for (double x : e.vector) norm += x * x;
        norm = std::sqrt(norm);
        if (norm > 0)
          for (double& x : e.vector) x /= norm;
        out.at(idx) = std::move(e);
      }
      for (const auto& e : out) {
        if (e.dim == 0)
          throw MalformedReplyError("embeddings response missing entries");
        for (double v : e.vector)
          if (!std::isfinite(v))
            throw MalformedReplyError("non-finite embedding component");
      }
      return out;
    }
    last_error = res ? "HTTP " + std::to_string(res->status)
                     : httplib::to_string(res.error());
    if (attempt < profile.max_retries)
      std::this_thread::sleep_for(std::chrono::milliseconds(200 * (attempt + 1)));
  }
  throw ModelTransportError("embeddings: " + last_error);
}

}  // namespace raganything
