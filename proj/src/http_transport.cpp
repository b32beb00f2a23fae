// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include "drbml/llm.hpp"

namespace drbml {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw UsageError("endpoint is not an absolute URL: " + url);
  const std::size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpResult default_http_post(const std::string& url, const std::string& body,
                             const HttpHeaders& headers, std::chrono::milliseconds timeout) {
  const SplitUrl target = split_url(url);
  httplib::Client client(target.origin);
  if (!client.is_valid()) return {0, {}, "unsupported endpoint " + target.origin};
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  httplib::Headers http_headers;
  std::string content_type = "application/json";
  for (const auto& [key, value] : headers) {
    if (key == "Content-Type") {
      content_type = value;
    } else {
      http_headers.emplace(key, value);
    }
  }
  auto res = client.Post(target.path, http_headers, body, content_type);
  if (!res) return {0, {}, httplib::to_string(res.error())};
  return {res->status, res->body, {}};
}

}  // namespace drbml
