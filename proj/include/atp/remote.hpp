#pragma once

#include <chrono>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace atp {

enum class RemoteErrorKind { kAuth, kTimeout, kTransport, kHttp, kMalformed };

class RemoteError : public std::runtime_error {
 public:
  RemoteError(RemoteErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  RemoteErrorKind kind() const { return kind_; }

 private:
  RemoteErrorKind kind_;
};

struct RemoteConfig {
  std::string base_url;  // e.g. http://127.0.0.1:8080
  std::string model;
  std::string path = "/v1/chat/completions";
  std::string api_key_env = "ATP_API_KEY";
  double temperature = 0.0;
  int seed = 0;
  int max_retries = 3;       // retries on transient failures, after the first try
  int timeout_ms = 30000;
  int backoff_ms = 250;      // doubles per retry
};

// Minimal chat-completions client: one user message in, assistant text out.
// Transient failures (timeouts, connection errors, 5xx) retry with
// exponential backoff; auth and malformed responses fail immediately.
class ChatClient {
 public:
  explicit ChatClient(RemoteConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.base_url.empty()) throw std::invalid_argument("ChatClient: base_url required");
  }

  const RemoteConfig& config() const { return cfg_; }

  // True when the last response echoed the seed parameter back.
  bool last_seed_acknowledged() const { return seed_acknowledged_; }

  std::string generate(const std::string& prompt) {
    nlohmann::json body = {
        {"model", cfg_.model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
        {"temperature", cfg_.temperature},
        {"seed", cfg_.seed},
    };
    const std::string payload = body.dump();

    int backoff = cfg_.backoff_ms;
    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
        backoff *= 2;
      }
      httplib::Client client(cfg_.base_url);
      client.set_connection_timeout(0, cfg_.timeout_ms * 1000);
      client.set_read_timeout(0, cfg_.timeout_ms * 1000);
      if (const char* token = std::getenv(cfg_.api_key_env.c_str()); token && *token)
        client.set_bearer_token_auth(token);

      httplib::Result res = client.Post(cfg_.path, payload, "application/json");
      if (!res) {
        const bool timeout = res.error() == httplib::Error::ConnectionTimeout ||
                             res.error() == httplib::Error::Read;
        last_error = "transport failure: " + httplib::to_string(res.error());
        if (attempt == cfg_.max_retries)
          throw RemoteError(timeout ? RemoteErrorKind::kTimeout : RemoteErrorKind::kTransport,
                            last_error);
        continue;
      }
      if (res->status == 401 || res->status == 403)
        throw RemoteError(RemoteErrorKind::kAuth,
                          "authentication rejected (" + std::to_string(res->status) + ")");
      if (res->status >= 500) {
        last_error = "server error " + std::to_string(res->status);
        if (attempt == cfg_.max_retries) throw RemoteError(RemoteErrorKind::kHttp, last_error);
        continue;
      }
      if (res->status != 200)
        throw RemoteError(RemoteErrorKind::kHttp, "unexpected status " + std::to_string(res->status));
      try {
        const nlohmann::json reply = nlohmann::json::parse(res->body);
        seed_acknowledged_ = reply.contains("seed") || reply.contains("system_fingerprint");
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw RemoteError(RemoteErrorKind::kMalformed,
                          std::string("malformed chat response: ") + e.what());
      }
    }
    throw RemoteError(RemoteErrorKind::kTransport, last_error);
  }

 private:
  RemoteConfig cfg_;
  bool seed_acknowledged_ = false;
};

inline std::string remote_generate(const RemoteConfig& cfg, const std::string& prompt) {
  ChatClient client(cfg);
  return client.generate(prompt);
}

}  // namespace atp
