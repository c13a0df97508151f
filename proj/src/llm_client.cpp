#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "sgnav/llm_client.hpp"

#include <httplib.h>

#include <cstdlib>
#include <nlohmann/json.hpp>

#include "sgnav/common.hpp"
#include "sgnav/image.hpp"

namespace sgnav {

std::optional<LlmConfig> LlmConfig::from_env() {
  const char* ep = std::getenv("SGNAV_LLM_ENDPOINT");
  if (!ep || !*ep) return std::nullopt;
  LlmConfig c;
  c.endpoint = ep;
  if (const char* m = std::getenv("SGNAV_LLM_MODEL")) c.model = m;
  if (const char* k = std::getenv("SGNAV_LLM_API_KEY")) c.api_key = k;
  return c;
}

std::string LlmClient::chat(const std::string& prompt, const std::string& png_bytes) {
  // split "scheme://host[:port]/base" into host part and path
  const std::string& ep = cfg_.endpoint;
  auto scheme_end = ep.find("://");
  if (scheme_end == std::string::npos) throw TransportError("bad endpoint: " + ep);
  auto path_start = ep.find('/', scheme_end + 3);
  std::string host = ep.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "" : ep.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  if (path.size() < 17 || path.compare(path.size() - 17, 17, "/chat/completions") != 0) path += "/chat/completions";

  nlohmann::json content = nlohmann::json::array();
  content.push_back({{"type", "text"}, {"text", prompt}});
  if (!png_bytes.empty())
    content.push_back(
        {{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + base64_encode(png_bytes)}}}});
  nlohmann::json body = {{"model", cfg_.model},
                         {"temperature", 0},
                         {"messages", nlohmann::json::array({{{"role", "user"}, {"content", content}}})}};

  httplib::Client cli(host);
  auto secs = static_cast<time_t>(cfg_.timeout_s);
  auto usecs = static_cast<time_t>((cfg_.timeout_s - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
  auto res = cli.Post(path, headers, body.dump(), "application/json");
  if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw TransportError("http status " + std::to_string(res->status));
  try {
    auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed response: ") + e.what());
  }
}

}  // namespace sgnav
