#pragma once

#include <cstdlib>
#include <memory>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "geocon/chat.hpp"

namespace geocon {

struct RemoteConfig {
  std::string base_url;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env;  // empty: no Authorization header
  int timeout_seconds = 120;
};

/// Chat-completion client speaking the {model, messages, temperature} shape.
class RemoteBackend : public ChatBackend {
 public:
  RemoteBackend(RemoteConfig cfg, std::shared_ptr<TokenBucket> limiter, RetryPolicy retry = {},
                Sleeper sleep = real_sleep)
      : cfg_(std::move(cfg)), limiter_(std::move(limiter)), retry_(retry), sleep_(std::move(sleep)) {}

  std::string complete(const std::vector<ChatMessage>& messages, double temperature) override {
    nlohmann::json body{{"model", cfg_.model}, {"temperature", temperature}, {"messages", nlohmann::json::array()}};
    for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    const std::string payload = body.dump();
    return with_retry(retry_, [&] { return post(payload); }, sleep_);
  }

  std::string label() const override { return "remote:" + cfg_.model; }

 private:
  std::string post(const std::string& payload) {
    if (limiter_) limiter_->acquire();
    httplib::Client client(cfg_.base_url);
    client.set_connection_timeout(cfg_.timeout_seconds);
    client.set_read_timeout(cfg_.timeout_seconds);
    httplib::Headers headers;
    if (!cfg_.api_key_env.empty()) {
      const char* key = std::getenv(cfg_.api_key_env.c_str());
      if (!key || !*key) throw BackendError("environment variable " + cfg_.api_key_env + " is not set", false);
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    auto res = client.Post(cfg_.path, headers, payload, "application/json");
    if (!res) throw BackendError("request failed: " + httplib::to_string(res.error()), true);
    if (res->status == 429 || res->status >= 500) {
      throw BackendError("server returned " + std::to_string(res->status), true, res->status);
    }
    if (res->status != 200) {
      throw BackendError("server returned " + std::to_string(res->status), false, res->status);
    }
    try {
      const auto j = nlohmann::json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("malformed response: ") + e.what(), false, res->status);
    }
  }

  RemoteConfig cfg_;
  std::shared_ptr<TokenBucket> limiter_;
  RetryPolicy retry_;
  Sleeper sleep_;
};

}  // namespace geocon
