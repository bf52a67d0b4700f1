#pragma once

// JSON-over-HTTP client for annotator, judge and critic endpoints.

#include <functional>
#include <optional>
#include <string>

#include "json.hpp"

namespace manifail {

struct Endpoint {
  std::string url;      // http(s)://host[:port]/path
  std::string api_key;  // sent as a bearer token when non-empty
  int max_attempts{3};
  double timeout_s{60.0};
};

// Environment variable holding the credential for each endpoint role.
inline constexpr const char* kAnnotatorKeyEnv = "MANIFAIL_ANNOTATOR_API_KEY";
inline constexpr const char* kJudgeKeyEnv = "MANIFAIL_JUDGE_API_KEY";
inline constexpr const char* kCriticKeyEnv = "MANIFAIL_CRITIC_API_KEY";

// Endpoint for `url` with its key read from `key_env` (empty if unset).
Endpoint endpoint_from_env(const std::string& url, const char* key_env);

struct RemoteResult {
  std::optional<nlohmann::json> value;
  int attempts{0};
  std::string error;  // last failure, when value is empty
};

// POSTs `body` and hands the response document to `parse`, retrying on
// transport errors, non-2xx statuses and parse failures (parse throws or
// returns nullopt).
RemoteResult post_json(
    const Endpoint& ep, const nlohmann::json& body,
    const std::function<std::optional<nlohmann::json>(const nlohmann::json&)>& parse);

// Model output often wraps JSON in prose or code fences and leaves trailing
// commas. Pulls out the outermost {...} and parses it leniently.
std::optional<nlohmann::json> extract_json_object(const std::string& text);

// The response text of a completion-style reply: the document itself when it
// already has `required_key`, else a string under content/text/output/
// choices[0].message.content parsed with extract_json_object.
std::optional<nlohmann::json> unwrap_reply(const nlohmann::json& reply,
                                           const std::string& required_key);

}  // namespace manifail
