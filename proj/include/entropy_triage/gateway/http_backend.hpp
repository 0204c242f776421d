#pragma once

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <chrono>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "entropy_triage/error.hpp"
#include "entropy_triage/gateway/backend.hpp"

namespace entropy_triage {

inline constexpr const char* kApiKeyEnv = "ENTROPY_TRIAGE_API_KEY";

/// Tool schema the grading prompt asks the model to call.
inline nlohmann::json record_score_tool() {
  return {{"type", "function"},
          {"function",
           {{"name", "record_score"},
            {"description", "Record the rubric score and a short rationale for the response."},
            {"parameters",
             {{"type", "object"},
              {"properties",
               {{"score", {{"type", "integer"}, {"description", "Rubric score"}}},
                {"rationale",
                 {{"type", "string"}, {"description", "Justification, at most 30 words"}}}}},
              {"required", {"score", "rationale"}}}}}}};
}

/// Request body for a chat-completions call.
inline nlohmann::json chat_request_body(const ChatRequest& req) {
  nlohmann::json body = {{"model", req.model_id},
                         {"messages", {{{"role", "user"}, {"content", req.prompt}}}},
                         {"temperature", req.temperature},
                         {"top_p", req.top_p},
                         {"max_tokens", req.max_output_tokens}};
  if (req.purpose == Purpose::Generate) {
    body["tools"] = nlohmann::json::array({record_score_tool()});
    body["tool_choice"] = {{"type", "function"}, {"function", {{"name", "record_score"}}}};
  }
  return body;
}

/// Pulls the payload out of a chat-completions response: the record_score
/// argument string for generation, the message content for judging.
inline std::string extract_payload(const nlohmann::json& response, Purpose purpose) {
  try {
    const auto& message = response.at("choices").at(0).at("message");
    if (purpose == Purpose::Generate) {
      if (message.contains("tool_calls") && !message["tool_calls"].empty()) {
        return message["tool_calls"][0].at("function").at("arguments").get<std::string>();
      }
      if (message.contains("function_call")) {
        return message["function_call"].at("arguments").get<std::string>();
      }
      // No tool call: hand back the text so the caller logs it as unparseable.
      return message.value("content", std::string{});
    }
    return message.value("content", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed chat completion response: ") + e.what(), false);
  }
}

/// OpenAI-compatible chat-completions endpoint. `base_url` is e.g.
/// "https://api.openai.com/v1"; requests go to base_url + "/chat/completions".
class HttpBackend : public Backend {
 public:
  HttpBackend(std::string base_url, std::string api_key,
              std::chrono::seconds timeout = std::chrono::seconds(60))
      : api_key_(std::move(api_key)), timeout_(timeout) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("base_url needs a scheme: " + base_url);
    const auto path_start = base_url.find('/', scheme_end + 3);
    origin_ = base_url.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? "" : base_url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  }

  std::string complete(const ChatRequest& req) override {
    httplib::Client client(origin_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    if (!api_key_.empty()) client.set_bearer_token_auth(api_key_);

    const auto body = chat_request_body(req).dump();
    auto res = client.Post(path_prefix_ + "/chat/completions", body, "application/json");
    if (!res) {
      throw TransportError("HTTP request failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      const bool retryable = res->status == 429 || res->status >= 500;
      throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200),
                           retryable);
    }
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
      throw TransportError("response body is not JSON", false);
    }
    return extract_payload(parsed, req.purpose);
  }

  std::string name() const override { return "http"; }

 private:
  std::string origin_;
  std::string path_prefix_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

}  // namespace entropy_triage
