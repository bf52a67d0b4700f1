#include "manifail/remote.hpp"

#include <chrono>
#include <cstdlib>
#include <regex>
#include <thread>

#include "httplib.h"
#include "manifail/errors.hpp"

namespace manifail {

using nlohmann::json;

Endpoint endpoint_from_env(const std::string& url, const char* key_env) {
  Endpoint ep;
  ep.url = url;
  if (const char* key = std::getenv(key_env)) ep.api_key = key;
  return ep;
}

namespace {

struct ParsedUrl {
  std::string origin;
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  static const std::regex re(R"(^(https?)://([^/:]+)(:[0-9]+)?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw ConfigError("malformed endpoint URL: " + url);
  return {m[1].str() + "://" + m[2].str() + m[3].str(), m[4].matched ? m[4].str() : "/"};
}

}  // namespace

RemoteResult post_json(const Endpoint& ep, const json& body,
                       const std::function<std::optional<json>(const json&)>& parse) {
  const ParsedUrl u = parse_url(ep.url);
  httplib::Client cli(u.origin);
  const auto timeout = std::chrono::duration<double>(ep.timeout_s);
  cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  httplib::Headers headers;
  if (!ep.api_key.empty()) headers.emplace("Authorization", "Bearer " + ep.api_key);

  RemoteResult result;
  const std::string payload = body.dump();
  for (int attempt = 1; attempt <= std::max(1, ep.max_attempts); ++attempt) {
    result.attempts = attempt;
    if (attempt > 1) std::this_thread::sleep_for(std::chrono::milliseconds(50 << (attempt - 2)));
    auto res = cli.Post(u.path, headers, payload, "application/json");
    if (!res) {
      result.error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      result.error = "HTTP status " + std::to_string(res->status);
      continue;
    }
    try {
      const json doc = json::parse(res->body);
      if (auto v = parse(doc)) {
        result.value = std::move(v);
        result.error.clear();
        return result;
      }
      result.error = "response did not match the expected schema";
    } catch (const std::exception& e) {
      result.error = std::string("unparseable response: ") + e.what();
    }
  }
  return result;
}

std::optional<json> extract_json_object(const std::string& text) {
  const auto first = text.find('{');
  const auto last = text.rfind('}');
  if (first == std::string::npos || last == std::string::npos || last < first) return std::nullopt;
  std::string body = text.substr(first, last - first + 1);
  static const std::regex trailing_comma(R"(,(\s*[}\]]))");
  body = std::regex_replace(body, trailing_comma, "$1");
  try {
    json j = json::parse(body);
    if (j.is_object()) return j;
  } catch (const json::exception&) {
  }
  return std::nullopt;
}

std::optional<json> unwrap_reply(const json& reply, const std::string& required_key) {
  if (!reply.is_object()) return std::nullopt;
  if (reply.contains(required_key)) return reply;
  const json* text = nullptr;
  for (const char* k : {"content", "text", "output", "response"}) {
    if (reply.contains(k) && reply[k].is_string()) text = &reply[k];
  }
  if (!text && reply.contains("choices") && reply["choices"].is_array() &&
      !reply["choices"].empty()) {
    const json& c = reply["choices"][0];
    if (c.contains("message") && c["message"].contains("content") &&
        c["message"]["content"].is_string()) {
      text = &c["message"]["content"];
    }
  }
  if (!text) return std::nullopt;
  auto inner = extract_json_object(text->get<std::string>());
  if (inner && inner->contains(required_key)) return inner;
  return std::nullopt;
}

}  // namespace manifail
