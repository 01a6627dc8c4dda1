#include "ain/text_service.hpp"

#include <httplib.h>
#include <json.hpp>

#include "ain/error.hpp"

namespace ain {

std::string make_request_body(const std::string& role, const std::string& payload) {
  nlohmann::ordered_json body;
  body["role"] = role;
  body["payload"] = payload;
  return body.dump();
}

HttpTextService::HttpTextService(std::string url, std::chrono::milliseconds timeout)
    : url_(std::move(url)), timeout_(timeout) {
  const auto scheme = url_.find("://");
  if (scheme == std::string::npos || url_.compare(0, scheme, "http") != 0) {
    throw ConfigError("provider URL must start with http:// : '" + url_ + "'");
  }
  const auto slash = url_.find('/', scheme + 3);
  host_ = url_.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url_.substr(slash);
}

std::string HttpTextService::request(const std::string& role, const std::string& payload) {
  httplib::Client client(host_);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());
  auto result = client.Post(path_, make_request_body(role, payload), "application/json; charset=utf-8");
  if (!result) throw ProviderError("request to " + url_ + " failed: " + httplib::to_string(result.error()));
  if (result->status != 200) {
    throw ProviderError("request to " + url_ + " returned HTTP " + std::to_string(result->status));
  }
  return result->body;
}

}  // namespace ain
