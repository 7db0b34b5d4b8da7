#pragma once

#include <thread>

#include "cellbench/error.hpp"

namespace cellbench {

template <typename Fn>
HttpResponse with_retries(const RetryPolicy& policy, Fn&& attempt) {
  auto backoff = policy.initial_backoff;
  std::string last_problem = "no attempts made";
  const int attempts = policy.attempts < 1 ? 1 : policy.attempts;
  for (int i = 0; i < attempts; ++i) {
    if (i > 0) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::duration_cast<std::chrono::milliseconds>(backoff * policy.multiplier);
    }
    try {
      HttpResponse r = attempt();
      if (!is_retryable_status(r.status)) return r;
      last_problem = "HTTP " + std::to_string(r.status);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Transport) throw;
      last_problem = e.what();
    }
  }
  throw Error(ErrorKind::Transport, "gave up after " + std::to_string(attempts) + " attempts (" + last_problem + ")");
}

}  // namespace cellbench
