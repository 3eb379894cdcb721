#pragma once
// Text generators that complete a prompt. The engine only sees LlmClient.

#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "stegcost/prng.hpp"

namespace stegcost::evolve {

struct Generation {
  std::vector<std::string> responses;  // raw response texts, at most n
  std::vector<std::string> errors;     // one entry per failed call
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  /// Sends `prompt` n times. A failed call is reported in errors and never throws.
  virtual Generation generate(const std::string& prompt, int n) = 0;
};

/// Offline stand-in: parses the first reference function of the prompt and
/// returns seeded mutations of it, renamed to the placeholder's name.
/// Mutation rules: perturb a numeric weight, swap a smoothing kernel
/// (avg <-> gauss), insert a smoothing stage, remove one. With probability
/// fault_rate a response is deliberately malformed.
class MockProvider : public LlmClient {
 public:
  enum class Rule { perturb_weight, swap_kernel, insert_smoothing, remove_smoothing, malformed };

  explicit MockProvider(std::uint64_t seed, double fault_rate = 0.1);
  Generation generate(const std::string& prompt, int n) override;

  /// One response from one rule, or "" when the rule has no site in `source`
  /// (deterministic in rng).
  static std::string apply_rule(Rule rule, const std::string& source, const std::string& target_name,
                                Xorshift64Star& rng);

 private:
  Xorshift64Star rng_;
  double fault_rate_;
};

struct HttpSettings {
  /// Full URL of the chat-completion endpoint, e.g. http://host:8080/v1/chat/completions.
  std::string endpoint;
  std::string model;
  /// Name of the environment variable holding the bearer token ("" = no auth).
  std::string api_key_env;
  double temperature = 1.0;
  std::chrono::milliseconds timeout{60'000};
  int retries = 2;
  std::chrono::milliseconds retry_backoff{500};
};

/// POSTs {model, messages: [{role: "user", content}], n: 1, temperature} once
/// per requested response and reads choices[*].message.content. 429 and 5xx
/// are retried; other failures are reported immediately.
class HttpProvider : public LlmClient {
 public:
  explicit HttpProvider(HttpSettings settings);
  Generation generate(const std::string& prompt, int n) override;

 private:
  HttpSettings settings_;
};

/// Replays recorded generations in order, for journal replay.
class ReplayProvider : public LlmClient {
 public:
  explicit ReplayProvider(std::deque<Generation> recorded) : recorded_(std::move(recorded)) {}
  /// Throws std::runtime_error when the recording is exhausted.
  Generation generate(const std::string& prompt, int n) override;

 private:
  std::deque<Generation> recorded_;
};

}  // namespace stegcost::evolve
