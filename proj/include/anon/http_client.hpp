#pragma once

// LabelingClient speaking the inference wire protocol over HTTP.

#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "anon/error.hpp"
#include "anon/protocol.hpp"

namespace anon {

class HttpLabelingClient : public LabelingClient {
public:
  /// `endpoint` is "http://host:port" or a full URL ending in the label path;
  /// a bare origin gets "/v1/label".
  explicit HttpLabelingClient(const std::string& endpoint, long timeout_ms = 5000) : timeout_ms_(timeout_ms) {
    const auto scheme = endpoint.find("://");
    const auto path_at = endpoint.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    origin_ = endpoint.substr(0, path_at);
    path_ = path_at == std::string::npos ? "/v1/label" : endpoint.substr(path_at);
    if (origin_.empty()) throw InvalidConfig("model endpoint is empty");
  }

  LabelResponse label(const LabelRequest& request) override {
    httplib::Client cli(origin_);
    if (!cli.is_valid()) throw InvalidConfig("unsupported model endpoint '" + origin_ + "'");
    const auto secs = timeout_ms_ / 1000, usecs = (timeout_ms_ % 1000) * 1000;
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);

    auto res = cli.Post(path_, to_json(request).dump(), "application/json");
    if (!res) throw DetectorUnavailable("model endpoint " + origin_ + path_ + ": " + httplib::to_string(res.error()));
    if (res->status >= 500)
      throw DetectorUnavailable("model endpoint returned HTTP " + std::to_string(res->status));
    if (res->status != 200) throw ProtocolViolation("model endpoint returned HTTP " + std::to_string(res->status));

    nlohmann::json body;
    try {
      body = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolViolation(std::string("response is not JSON: ") + e.what());
    }
    return parse_label_response(body, request);
  }

  const std::string& origin() const noexcept { return origin_; }
  const std::string& path() const noexcept { return path_; }

private:
  std::string origin_;
  std::string path_;
  long timeout_ms_;
};

}  // namespace anon
