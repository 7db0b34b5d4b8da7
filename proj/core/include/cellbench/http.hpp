#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

namespace cellbench {

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Retries apply to connection failures, 429 and 5xx responses.
struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{250};
  double multiplier = 2.0;
};

/// Thin blocking client bound to one origin ("http[s]://host[:port]").
class HttpClient {
 public:
  /// `base_url` may carry a path prefix which is prepended to every request path.
  explicit HttpClient(std::string_view base_url, std::chrono::milliseconds timeout = std::chrono::seconds(60));
  ~HttpClient();
  HttpClient(HttpClient&&) noexcept;
  HttpClient& operator=(HttpClient&&) noexcept;

  /// Throws Transport when no response is received.
  HttpResponse get(const std::string& path, const std::map<std::string, std::string>& headers = {});
  HttpResponse post_json(const std::string& path, const std::string& body,
                         const std::map<std::string, std::string>& headers = {});

  const std::string& base_path() const noexcept { return base_path_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string base_path_;
};

/// Splits "scheme://host:port/path" into origin and path.
struct ParsedUrl {
  std::string origin;
  std::string path;  // starts with '/', "/" when absent
};
ParsedUrl parse_url(std::string_view url);

std::string url_encode(std::string_view s);

bool is_retryable_status(int status) noexcept;

/// Calls `attempt` until it returns a non-retryable response or attempts run out.
/// Connection failures (Transport errors) are retried as well. Exhaustion throws Transport.
template <typename Fn>
HttpResponse with_retries(const RetryPolicy& policy, Fn&& attempt);

/// Enforces a minimum spacing between requests; safe to share across threads.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second);
  void acquire();

 private:
  std::mutex mutex_;
  std::chrono::steady_clock::duration interval_;
  std::chrono::steady_clock::time_point next_;
};

}  // namespace cellbench

#include "cellbench/detail/retry.ipp"
