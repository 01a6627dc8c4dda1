#pragma once

#include <chrono>
#include <string>

namespace ain {

// Request/reply text endpoint standing in for captioning, translation and
// verse-generation services. `role` is "observe" or "compose".
class TextService {
 public:
  virtual ~TextService() = default;
  // Returns the UTF-8 reply body; throws ProviderError on any failure.
  virtual std::string request(const std::string& role, const std::string& payload) = 0;
};

// POSTs `{"role": ..., "payload": ...}` to `url` (http://host[:port]/path).
class HttpTextService final : public TextService {
 public:
  explicit HttpTextService(std::string url,
                           std::chrono::milliseconds timeout = std::chrono::seconds(10));
  std::string request(const std::string& role, const std::string& payload) override;

  const std::string& url() const { return url_; }

 private:
  std::string url_;
  std::string host_;  // scheme://host:port
  std::string path_;
  std::chrono::milliseconds timeout_;
};

std::string make_request_body(const std::string& role, const std::string& payload);

}  // namespace ain
