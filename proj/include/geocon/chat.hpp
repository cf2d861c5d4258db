#pragma once

#include <algorithm>
#include <chrono>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "geocon/tool.hpp"

namespace geocon {

struct ChatMessage {
  std::string role;  // "system", "user" or "assistant"
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

class BackendError : public Error {
 public:
  BackendError(const std::string& what, bool transient, int status = 0)
      : Error(what), transient_(transient), status_(status) {}

  bool transient() const { return transient_; }
  int status() const { return status_; }

 private:
  bool transient_;
  int status_;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages, double temperature) = 0;
  virtual std::string label() const = 0;
};

/// Replays a fixed queue of replies. Optionally fails on a given call.
class ScriptedBackend : public ChatBackend {
 public:
  struct Call {
    std::vector<ChatMessage> messages;
    double temperature;
  };

  explicit ScriptedBackend(std::vector<std::string> replies, std::string label = "scripted")
      : replies_(replies.begin(), replies.end()), label_(std::move(label)) {}

  /// Call number (1-based) that throws a non-transient BackendError.
  void fail_on_call(std::size_t n) { fail_on_ = n; }

  std::string complete(const std::vector<ChatMessage>& messages, double temperature) override {
    calls_.push_back({messages, temperature});
    if (fail_on_ && calls_.size() == *fail_on_) throw BackendError(label_ + ": scripted failure", false);
    if (replies_.empty()) throw BackendError(label_ + ": script exhausted", false);
    std::string reply = std::move(replies_.front());
    replies_.pop_front();
    return reply;
  }

  std::string label() const override { return label_; }
  const std::vector<Call>& calls() const { return calls_; }
  std::size_t remaining() const { return replies_.size(); }

 private:
  std::deque<std::string> replies_;
  std::string label_;
  std::vector<Call> calls_;
  std::optional<std::size_t> fail_on_;
};

// ---------------------------------------------------------------------------
// Retry and rate limiting

struct RetryPolicy {
  std::size_t max_attempts = 4;
  std::chrono::milliseconds initial_delay{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{8000};

  /// Delay before retry number `retry` (1-based).
  std::chrono::milliseconds delay(std::size_t retry) const {
    double ms = static_cast<double>(initial_delay.count());
    for (std::size_t i = 1; i < retry; ++i) ms *= multiplier;
    ms = std::min(ms, static_cast<double>(max_delay.count()));
    return std::chrono::milliseconds(static_cast<long long>(ms));
  }
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline void real_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

/// Runs `fn`, retrying transient BackendErrors with exponential backoff.
template <typename Fn>
auto with_retry(const RetryPolicy& policy, Fn&& fn, const Sleeper& sleep = real_sleep) -> decltype(fn()) {
  for (std::size_t attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const BackendError& e) {
      if (!e.transient() || attempt >= policy.max_attempts) throw;
      sleep(policy.delay(attempt));
    }
  }
}

/// Thread-safe token bucket shared by every backend of a process.
class TokenBucket {
 public:
  using Clock = std::chrono::steady_clock;

  TokenBucket(double capacity, double refill_per_second)
      : capacity_(capacity), rate_(refill_per_second), tokens_(capacity), last_(Clock::now()) {}

  bool try_acquire(double n = 1.0) {
    std::lock_guard lock(mu_);
    refill();
    if (tokens_ < n) return false;
    tokens_ -= n;
    return true;
  }

  void acquire(double n = 1.0) {
    for (;;) {
      std::chrono::duration<double> wait{};
      {
        std::lock_guard lock(mu_);
        refill();
        if (tokens_ >= n) {
          tokens_ -= n;
          return;
        }
        wait = std::chrono::duration<double>((n - tokens_) / rate_);
      }
      std::this_thread::sleep_for(wait);
    }
  }

  double available() {
    std::lock_guard lock(mu_);
    refill();
    return tokens_;
  }

 private:
  void refill() {
    const auto now = Clock::now();
    tokens_ = std::min(capacity_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
    last_ = now;
  }

  std::mutex mu_;
  double capacity_;
  double rate_;
  double tokens_;
  Clock::time_point last_;
};

}  // namespace geocon
