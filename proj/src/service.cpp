#include "osnlab/service.hpp"

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <random>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "osnlab/error.hpp"

namespace osnlab {

void ServiceConfig::validate() const {
  if (friend_cap < 1) throw ConfigError("friend_cap must be >= 1");
  if (rate_limit < 0) throw ConfigError("rate_limit must be >= 0");
  if (credentials.empty())
    throw ConfigError("service needs at least one credential");
}

namespace {

std::string random_token() {
  // 128 bits from the system entropy source, hex-encoded.
  std::random_device rd;
  char buf[33];
  for (int half = 0; half < 2; ++half) {
    std::uint64_t value =
        (std::uint64_t(rd()) << 32) ^ std::uint64_t(rd());
    std::snprintf(buf + half * 16, 17, "%016llx",
                  static_cast<unsigned long long>(value));
  }
  return std::string(buf, 32);
}

std::string cookie_token(const httplib::Request& req) {
  // Single session cookie; anything else in the header is ignored.
  const std::string cookie = req.get_header_value("Cookie");
  const std::string key = "session=";
  auto pos = cookie.find(key);
  if (pos == std::string::npos) return {};
  auto end = cookie.find(';', pos);
  return cookie.substr(pos + key.size(),
                       end == std::string::npos ? std::string::npos
                                                : end - pos - key.size());
}

}  // namespace

struct OsnService::Impl {
  std::shared_ptr<const SyntheticWorld> world;
  ServiceConfig config;

  // Per node, friend ASSIGNED ids ascending; responses are pure lookups.
  std::vector<std::vector<std::uint64_t>> friend_ids;

  httplib::Server server;
  std::thread server_thread;
  int bound_port = 0;

  struct SessionState {
    std::uint32_t node_index = 0;
    RateLimiter bucket;
    explicit SessionState(std::uint32_t node, double rate)
        : node_index(node), bucket(rate) {}
  };
  std::mutex session_mutex;
  std::unordered_map<std::string, SessionState> sessions;
  std::chrono::steady_clock::time_point epoch =
      std::chrono::steady_clock::now();

  std::atomic<std::uint64_t> requests{0}, served{0}, throttled{0},
      forbidden{0}, not_found{0};

  double now_seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         epoch)
        .count();
  }

  Impl(std::shared_ptr<const SyntheticWorld> w, ServiceConfig cfg)
      : world(std::move(w)), config(std::move(cfg)) {
    config.validate();
    for (const Credential& cred : config.credentials)
      if (!world->is_id_assigned(cred.seed_node_id))
        throw ConfigError("credential '" + cred.username +
                          "' names unassigned seed id " +
                          std::to_string(cred.seed_node_id));

    const std::size_t n = world->graph.node_count();
    friend_ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto nbrs = world->graph.neighbors_at(i);
      auto& out = friend_ids[i];
      out.reserve(nbrs.size());
      for (NodeId v : nbrs)
        out.push_back(world->id_of[static_cast<std::size_t>(v)]);
      std::sort(out.begin(), out.end());
    }

    server.new_task_queue = [] { return new httplib::ThreadPool(16); };
    // Idle keep-alive connections pin worker threads during shutdown;
    // a short timeout keeps stop() prompt.
    server.set_keep_alive_timeout(1);
    install_routes();
  }

  void install_routes() {
    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("ok\n", "text/plain");
    });

    server.Post("/login", [this](const httplib::Request& req,
                                 httplib::Response& res) {
      ++requests;
      if (!req.has_param("username") || !req.has_param("password")) {
        res.status = 400;
        res.set_content("{\"error\":\"missing_fields\"}", "application/json");
        return;
      }
      const std::string username = req.get_param_value("username");
      const std::string password = req.get_param_value("password");
      const Credential* match = nullptr;
      for (const Credential& cred : config.credentials)
        if (cred.username == username && cred.password == password)
          match = &cred;
      if (!match) {
        res.status = 401;
        res.set_content("{\"error\":\"bad_credentials\"}", "application/json");
        return;
      }
      const auto node_index = static_cast<std::uint32_t>(
          world->index_for_id(match->seed_node_id));
      const std::string token = random_token();
      {
        std::lock_guard<std::mutex> lock(session_mutex);
        sessions.emplace(token,
                         SessionState(node_index, config.rate_limit));
      }
      res.set_header("Set-Cookie", "session=" + token + "; Path=/");
      res.set_content("{\"ok\":true}", "application/json");
    });

    server.Get("/friends", [this](const httplib::Request& req,
                                  httplib::Response& res) {
      ++requests;
      const std::string token = cookie_token(req);
      std::uint32_t session_node = 0;
      {
        std::lock_guard<std::mutex> lock(session_mutex);
        auto it = token.empty() ? sessions.end() : sessions.find(token);
        if (it == sessions.end()) {
          res.status = 401;
          res.set_content("{\"error\":\"unauthorized\"}", "application/json");
          return;
        }
        session_node = it->second.node_index;
        auto decision = it->second.bucket.request(now_seconds());
        if (!decision.allowed) {
          ++throttled;
          res.status = 429;
          res.set_header(
              "Retry-After",
              std::to_string(std::max<long>(
                  1, static_cast<long>(std::ceil(decision.retry_after)))));
          res.set_content("{\"error\":\"rate_limited\"}", "application/json");
          return;
        }
      }

      std::uint32_t target = session_node;
      if (req.has_param("id")) {
        const std::string raw = req.get_param_value("id");
        errno = 0;
        char* end = nullptr;
        const std::uint64_t id = std::strtoull(raw.c_str(), &end, 10);
        if (errno != 0 || raw.empty() || end != raw.c_str() + raw.size()) {
          res.status = 400;
          res.set_content("{\"error\":\"bad_id\"}", "application/json");
          return;
        }
        if (!world->is_id_assigned(id)) {
          ++not_found;
          res.status = 404;
          res.set_content("{\"error\":\"not_found\"}", "application/json");
          return;
        }
        target = static_cast<std::uint32_t>(world->index_for_id(id));
      }

      // Private lists are visible to the profile itself and its friends.
      if (world->is_private[target] && target != session_node &&
          !world->graph.has_edge(target, session_node)) {
        ++forbidden;
        res.status = 403;
        res.set_content("{\"error\":\"forbidden\"}", "application/json");
        return;
      }

      const auto& all = friend_ids[target];
      const std::size_t shown =
          std::min<std::size_t>(all.size(), config.friend_cap);
      nlohmann::json body;
      body["id"] = world->id_of[target];
      body["truncated"] = all.size() > config.friend_cap;
      nlohmann::json friends = nlohmann::json::array();
      for (std::size_t i = 0; i < shown; ++i) friends.push_back(all[i]);
      body["friends"] = std::move(friends);
      ++served;
      res.set_content(body.dump(), "application/json");
    });
  }
};

OsnService::OsnService(std::shared_ptr<const SyntheticWorld> world,
                       ServiceConfig config)
    : impl_(std::make_unique<Impl>(std::move(world), std::move(config))) {}

OsnService::~OsnService() {
  if (impl_) stop();
}

void OsnService::start() {
  Impl& impl = *impl_;
  if (impl.config.listen_port == 0) {
    impl.bound_port = impl.server.bind_to_any_port(impl.config.listen_host);
    if (impl.bound_port <= 0)
      throw Error("cannot bind to " + impl.config.listen_host);
  } else {
    if (!impl.server.bind_to_port(impl.config.listen_host,
                                  impl.config.listen_port))
      throw Error("cannot bind to " + impl.config.listen_host + ":" +
                  std::to_string(impl.config.listen_port));
    impl.bound_port = impl.config.listen_port;
  }
  impl.server_thread = std::thread([&impl] { impl.server.listen_after_bind(); });
  while (!impl.server.is_running())
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
}

void OsnService::stop() {
  Impl& impl = *impl_;
  if (impl.server_thread.joinable()) {
    impl.server.stop();
    impl.server_thread.join();
  }
}

int OsnService::port() const { return impl_->bound_port; }

std::string OsnService::base_url() const {
  return "http://" + impl_->config.listen_host + ":" +
         std::to_string(impl_->bound_port);
}

ServiceCounters OsnService::counters() const {
  ServiceCounters c;
  c.requests = impl_->requests;
  c.served = impl_->served;
  c.throttled = impl_->throttled;
  c.forbidden = impl_->forbidden;
  c.not_found = impl_->not_found;
  return c;
}

}  // namespace osnlab
