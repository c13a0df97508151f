#pragma once

#include <optional>
#include <string>

namespace sgnav {

struct LlmConfig {
  std::string endpoint;  // base URL, e.g. https://host/v1
  std::string model;
  std::string api_key;
  double timeout_s = 30.0;

  // SGNAV_LLM_ENDPOINT, SGNAV_LLM_MODEL, SGNAV_LLM_API_KEY; nullopt when the endpoint is unset.
  static std::optional<LlmConfig> from_env();
};

// OpenAI-compatible chat-completions client. Throws TransportError on any
// network, status or response-shape failure.
class LlmClient {
 public:
  explicit LlmClient(LlmConfig cfg) : cfg_(std::move(cfg)) {}
  virtual ~LlmClient() = default;
  virtual std::string chat(const std::string& prompt, const std::string& png_bytes = "");
  const LlmConfig& config() const { return cfg_; }

 private:
  LlmConfig cfg_;
};

}  // namespace sgnav
