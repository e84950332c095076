#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "osnlab/synth_world.hpp"

namespace osnlab {

struct Credential {
  std::string username;
  std::string password;
  std::uint64_t seed_node_id = 0;  // assigned id of the profile
};

struct ServiceConfig {
  std::string listen_host = "127.0.0.1";
  int listen_port = 0;        // 0 picks a free port
  std::uint64_t friend_cap = 400;
  double rate_limit = 0.0;    // requests/second per session; 0 = unlimited
  std::vector<Credential> credentials;

  void validate() const;
};

/// Token bucket: capacity = rate, refilled at rate tokens/second. Driven by
/// an explicit clock so policies are testable without sleeping.
class RateLimiter {
 public:
  explicit RateLimiter(double rate)
      : rate_(rate), tokens_(rate), last_(0.0) {}

  struct Decision {
    bool allowed = true;
    double retry_after = 0.0;  // seconds until a token is available
  };

  Decision request(double now_seconds) {
    if (rate_ <= 0) return {true, 0.0};
    tokens_ = std::min(rate_, tokens_ + (now_seconds - last_) * rate_);
    last_ = now_seconds;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return {true, 0.0};
    }
    return {false, (1.0 - tokens_) / rate_};
  }

 private:
  double rate_;
  double tokens_;
  double last_;
};

struct ServiceCounters {
  std::uint64_t requests = 0;
  std::uint64_t served = 0;
  std::uint64_t throttled = 0;
  std::uint64_t forbidden = 0;
  std::uint64_t not_found = 0;
};

/// Mock OSN web service over a SyntheticWorld.
///
/// POST /login   (username, password)        -> Set-Cookie: session=...
/// GET  /friends?id=X&filter=afp             -> {"id", "friends", "truncated"}
/// GET  /friends?filter=afp                  -> the session profile's list
/// GET  /healthz                             -> 200
///
/// Friend lists are returned in ascending assigned-id order, truncated to
/// friend_cap entries. A private profile is served only to itself and to
/// its friends; unknown ids are 404, private-but-existing ids 403 (the
/// rejection sampler needs the distinction), throttled sessions get 429
/// with Retry-After.
class OsnService {
 public:
  OsnService(std::shared_ptr<const SyntheticWorld> world, ServiceConfig config);
  ~OsnService();
  OsnService(const OsnService&) = delete;
  OsnService& operator=(const OsnService&) = delete;

  void start();  // binds and serves on a background thread
  void stop();

  int port() const;
  std::string base_url() const;
  ServiceCounters counters() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace osnlab
