#include "cellbench/http.hpp"

#include <cctype>
#include <thread>

#include <httplib.h>

#include "cellbench/error.hpp"

namespace cellbench {

ParsedUrl parse_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) throw Error(ErrorKind::Config, "URL needs a scheme: " + std::string(url));
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  if (path_start == std::string_view::npos) {
    out.origin = std::string(url);
    out.path = "/";
  } else {
    out.origin = std::string(url.substr(0, path_start));
    out.path = std::string(url.substr(path_start));
  }
  return out;
}

std::string url_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

bool is_retryable_status(int status) noexcept { return status == 429 || status >= 500; }

struct HttpClient::Impl {
  explicit Impl(const std::string& origin) : client(origin) {}
  httplib::Client client;
};

HttpClient::HttpClient(std::string_view base_url, std::chrono::milliseconds timeout) {
  auto parsed = parse_url(base_url);
  impl_ = std::make_unique<Impl>(parsed.origin);
  if (!impl_->client.is_valid()) throw Error(ErrorKind::Config, "invalid URL " + std::string(base_url));
  base_path_ = parsed.path == "/" ? "" : parsed.path;
  if (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  impl_->client.set_connection_timeout(secs.count(), usecs.count());
  impl_->client.set_read_timeout(secs.count(), usecs.count());
  impl_->client.set_write_timeout(secs.count(), usecs.count());
  impl_->client.set_follow_location(true);
}

HttpClient::~HttpClient() = default;
HttpClient::HttpClient(HttpClient&&) noexcept = default;
HttpClient& HttpClient::operator=(HttpClient&&) noexcept = default;

namespace {

httplib::Headers to_headers(const std::map<std::string, std::string>& headers) {
  httplib::Headers out;
  for (const auto& [k, v] : headers) out.emplace(k, v);
  return out;
}

}  // namespace

HttpResponse HttpClient::get(const std::string& path, const std::map<std::string, std::string>& headers) {
  auto res = impl_->client.Get(base_path_ + path, to_headers(headers));
  if (!res) throw Error(ErrorKind::Transport, "GET " + path + ": " + httplib::to_string(res.error()));
  return HttpResponse{res->status, res->body};
}

HttpResponse HttpClient::post_json(const std::string& path, const std::string& body,
                                   const std::map<std::string, std::string>& headers) {
  auto res = impl_->client.Post(base_path_ + path, to_headers(headers), body, "application/json");
  if (!res) throw Error(ErrorKind::Transport, "POST " + path + ": " + httplib::to_string(res.error()));
  return HttpResponse{res->status, res->body};
}

RateLimiter::RateLimiter(double requests_per_second)
    : interval_(requests_per_second > 0
                    ? std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                          std::chrono::duration<double>(1.0 / requests_per_second))
                    : std::chrono::steady_clock::duration::zero()),
      next_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

}  // namespace cellbench
