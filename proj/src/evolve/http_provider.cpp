#include <cstdlib>
#include <regex>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "stegcost/llm.hpp"

namespace stegcost::evolve {

namespace {

struct Url {
  std::string origin;  // scheme://host:port
  std::string path;
};

Url parse_url(const std::string& url) {
  static const std::regex re(R"(^(https?)://([^/:]+)(?::(\d+))?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw std::invalid_argument("malformed endpoint URL '" + url + "'");
  Url u;
  const std::string scheme = m[1];
  const std::string port = m[3].matched ? std::string(m[3]) : (scheme == "https" ? "443" : "80");
  u.origin = scheme + "://" + std::string(m[2]) + ":" + port;
  u.path = m[4].matched ? std::string(m[4]) : "/";
  return u;
}

}  // namespace

HttpProvider::HttpProvider(HttpSettings settings) : settings_(std::move(settings)) {
  parse_url(settings_.endpoint);
}

Generation HttpProvider::generate(const std::string& prompt, int n) {
  Generation g;
  const Url url = parse_url(settings_.endpoint);
  httplib::Headers headers;
  if (!settings_.api_key_env.empty()) {
    const char* key = std::getenv(settings_.api_key_env.c_str());
    if (!key || !*key) {
      for (int i = 0; i < n; ++i) g.errors.push_back("environment variable " + settings_.api_key_env + " is not set");
      return g;
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  nlohmann::json body = {{"model", settings_.model},
                         {"messages", {{{"role", "user"}, {"content", prompt}}}},
                         {"n", 1},
                         {"temperature", settings_.temperature}};
  const std::string payload = body.dump();

  httplib::Client client(url.origin);
  client.set_connection_timeout(settings_.timeout);
  client.set_read_timeout(settings_.timeout);
  client.set_write_timeout(settings_.timeout);

  for (int call = 0; call < n; ++call) {
    std::string error;
    bool done = false;
    for (int attempt = 0; attempt <= settings_.retries && !done; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(settings_.retry_backoff * attempt);
      auto res = client.Post(url.path, headers, payload, "application/json");
      if (!res) {
        error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        error = "HTTP " + std::to_string(res->status);
        continue;
      }
      done = true;
      if (res->status != 200) {
        error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
        break;
      }
      try {
        const auto j = nlohmann::json::parse(res->body);
        const auto& choices = j.at("choices");
        for (const auto& c : choices) g.responses.push_back(c.at("message").at("content").get<std::string>());
        error = choices.empty() ? "response has no choices" : "";
      } catch (const std::exception& e) {
        error = std::string("malformed response: ") + e.what();
      }
    }
    if (!error.empty()) g.errors.push_back(error);
  }
  if (g.responses.size() > static_cast<std::size_t>(n)) g.responses.resize(static_cast<std::size_t>(n));
  return g;
}

}  // namespace stegcost::evolve
