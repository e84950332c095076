#include "osnlab/crawl.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <deque>
#include <fstream>
#include <iostream>
#include <span>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <json.hpp>

#include "osnlab/error.hpp"
#include "osnlab/rng.hpp"

namespace osnlab {

namespace {

using Clock = std::chrono::steady_clock;
using Observation = std::pair<std::uint64_t, std::uint64_t>;

constexpr int kDepthUni = -1;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void sleep_seconds(double s) {
  if (s > 0) std::this_thread::sleep_for(std::chrono::duration<double>(s));
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    auto tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

bool parse_u64(const std::string& token, std::uint64_t& out) {
  if (token.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtoull(token.c_str(), &end, 10);
  return errno == 0 && end == token.c_str() + token.size();
}

bool parse_i32(const std::string& token, int& out) {
  if (token.empty()) return false;
  errno = 0;
  char* end = nullptr;
  long v = std::strtol(token.c_str(), &end, 10);
  if (errno != 0 || end != token.c_str() + token.size()) return false;
  out = static_cast<int>(v);
  return true;
}

void append_visit_line(std::ostream& out, const VisitRecord& v) {
  out << v.id << '\t' << to_string(v.outcome) << '\t' << v.degree << '\t'
      << (v.truncated ? 1 : 0) << '\t' << v.depth << '\n';
}

}  // namespace

std::string to_string(VisitOutcome outcome) {
  switch (outcome) {
    case VisitOutcome::visited: return "visited";
    case VisitOutcome::not_found: return "not_found";
    case VisitOutcome::private_profile: return "private";
    case VisitOutcome::error: return "error";
  }
  return "error";
}

VisitOutcome visit_outcome_from_string(const std::string& s) {
  if (s == "visited") return VisitOutcome::visited;
  if (s == "not_found") return VisitOutcome::not_found;
  if (s == "private") return VisitOutcome::private_profile;
  if (s == "error") return VisitOutcome::error;
  throw Error("unknown visit outcome '" + s + "'");
}

void CrawlLimits::validate() const {
  if (max_depth == 0 && max_seconds <= 0 && max_visited == 0)
    throw ConfigError("at least one crawl budget must be finite");
}

std::uint64_t RawCrawl::visited_count() const {
  return count(VisitOutcome::visited);
}

std::uint64_t RawCrawl::count(VisitOutcome outcome) const {
  std::uint64_t n = 0;
  for (const VisitRecord& v : visits)
    if (v.outcome == outcome) ++n;
  return n;
}

std::vector<std::uint64_t> generate_uniform_queue(std::size_t count,
                                                  unsigned id_space_bits,
                                                  std::uint64_t seed) {
  if (id_space_bits == 0 || id_space_bits > 64)
    throw ConfigError("id_space_bits must be in [1, 64]");
  Rng rng(seed);
  std::vector<std::uint64_t> queue(count);
  for (auto& id : queue) id = rng.bits(id_space_bits);
  return queue;
}

std::uint64_t uniform_queue_seed(std::uint64_t base_seed, unsigned queue_index) {
  return derive_seed(base_seed, queue_index);
}

// ---------------------------------------------------------------------------
// HTTP client with the retry policy shared by both agents.

namespace {

struct FriendsResult {
  // 200/403/404 after retries; 0 = gave up (recorded as outcome error);
  // -1 = duration budget exhausted mid-retry (attempt stays pending).
  int status = 0;
  std::uint64_t id = 0;
  std::vector<std::uint64_t> friends;
  bool truncated = false;
};

class AgentClient {
 public:
  AgentClient(const std::string& base_url, CrawlerOptions options)
      : http_(base_url.c_str()), options_(options) {
    http_.set_keep_alive(true);
    http_.set_connection_timeout(
        std::chrono::duration<double>(options_.http_timeout_seconds));
    http_.set_read_timeout(
        std::chrono::duration<double>(options_.http_timeout_seconds));
  }

  void login(const std::string& username, const std::string& password) {
    httplib::Params params{{"username", username}, {"password", password}};
    auto resp = http_.Post("/login", params);
    if (!resp)
      throw HttpError(0, "login transport failure: " +
                             httplib::to_string(resp.error()));
    if (resp->status != 200)
      throw HttpError(resp->status, "login rejected with status " +
                                        std::to_string(resp->status));
    std::string cookie = resp->get_header_value("Set-Cookie");
    session_cookie_ = cookie.substr(0, cookie.find(';'));
    if (session_cookie_.empty())
      throw HttpError(200, "login response carried no session cookie");
  }

  /// deadline <= 0 means unlimited; otherwise seconds from `start`.
  FriendsResult friends(std::optional<std::uint64_t> id, double deadline,
                        Clock::time_point start, std::uint64_t& throttled,
                        std::uint64_t& retried) {
    std::string path = "/friends?filter=afp";
    if (id) path = "/friends?id=" + std::to_string(*id) + "&filter=afp";

    int failures = 0;
    for (;;) {
      if (deadline > 0 && seconds_since(start) >= deadline)
        return FriendsResult{-1, 0, {}, false};
      httplib::Headers headers{{"Cookie", session_cookie_}};
      auto resp = http_.Get(path.c_str(), headers);
      int status = resp ? resp->status : 0;

      if (status == 429) {
        ++throttled;
        double wait = 1.0;
        std::uint64_t header_seconds = 0;
        if (parse_u64(resp->get_header_value("Retry-After"), header_seconds))
          wait = static_cast<double>(header_seconds);
        sleep_seconds(wait);
        continue;  // retried until the duration budget says otherwise
      }
      if (status == 200) {
        FriendsResult out;
        out.status = 200;
        auto body = nlohmann::json::parse(resp->body, nullptr, false);
        if (body.is_discarded() || !body.contains("id") ||
            !body.contains("friends"))
          throw HttpError(200, "malformed friends payload");
        out.id = body["id"].get<std::uint64_t>();
        out.truncated = body.value("truncated", false);
        out.friends.reserve(body["friends"].size());
        for (const auto& f : body["friends"])
          out.friends.push_back(f.get<std::uint64_t>());
        return out;
      }
      if (status == 403 || status == 404) {
        FriendsResult out;
        out.status = status;
        if (id) out.id = *id;
        return out;
      }
      // Transport failure or 5xx: bounded exponential backoff.
      ++failures;
      if (failures >= options_.server_error_attempts)
        return FriendsResult{0, id.value_or(0), {}, false};
      ++retried;
      sleep_seconds(options_.backoff_base_seconds *
                    static_cast<double>(1 << (failures - 1)));
    }
  }

 private:
  httplib::Client http_;
  CrawlerOptions options_;
  std::string session_cookie_;
};

// ---------------------------------------------------------------------------
// Incremental persistence. Observations are flushed before their visit
// record, so a visit line on disk guarantees its observations are complete;
// a crash leaves at worst an orphan observation tail, dropped on load.

struct ShardData {
  std::vector<VisitRecord> visits;
  std::vector<Observation> observations;
};

class ShardWriter {
 public:
  ShardWriter() = default;

  /// Rewrites the shard to the given consistent prefix (empty for a fresh
  /// crawl) and keeps the streams open for appending. The rewrite discards
  /// any orphan tail a previous crash left behind.
  void open(const std::filesystem::path& dir, const std::string& suffix,
            const ShardData& existing) {
    obs_.open(dir / ("observations.tsv" + suffix), std::ios::trunc);
    visits_.open(dir / ("visits.tsv" + suffix), std::ios::trunc);
    if (!obs_ || !visits_)
      throw Error("cannot open crawl output in " + dir.string());
    for (const auto& [a, b] : existing.observations)
      obs_ << a << '\t' << b << '\n';
    for (const auto& v : existing.visits) append_visit_line(visits_, v);
    obs_.flush();
    visits_.flush();
    active_ = true;
  }

  bool active() const { return active_; }

  void record(const VisitRecord& visit,
              const std::vector<std::uint64_t>& friends) {
    if (!active_) return;
    for (std::uint64_t f : friends) obs_ << visit.id << '\t' << f << '\n';
    obs_.flush();
    append_visit_line(visits_, visit);
    visits_.flush();
  }

 private:
  std::ofstream obs_, visits_;
  bool active_ = false;
};

/// Reads one shard, tolerating a corrupt or orphan tail (warns, truncates).
ShardData load_shard(const std::filesystem::path& dir,
                     const std::string& suffix) {
  ShardData shard;
  const auto visits_path = dir / ("visits.tsv" + suffix);
  const auto obs_path = dir / ("observations.tsv" + suffix);

  auto read_lines = [](const std::filesystem::path& p) {
    std::vector<std::string> lines;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) lines.push_back(line);
    }
    return lines;
  };

  const auto visit_lines = read_lines(visits_path);
  for (std::size_t i = 0; i < visit_lines.size(); ++i) {
    auto fields = split_tabs(visit_lines[i]);
    VisitRecord v;
    std::uint64_t truncated = 0;
    bool ok = fields.size() == 5 && parse_u64(fields[0], v.id) &&
              parse_u64(fields[2], v.degree) &&
              parse_u64(fields[3], truncated) && parse_i32(fields[4], v.depth);
    if (ok) {
      try {
        v.outcome = visit_outcome_from_string(fields[1]);
      } catch (const Error&) {
        ok = false;
      }
    }
    if (!ok) {
      if (i + 1 == visit_lines.size()) {
        std::cerr << "[osnlab] warning: truncating corrupt tail record in "
                  << visits_path.string() << "\n";
        break;
      }
      throw ParseError(visits_path.filename().string(), i + 1,
                       "corrupt visit record");
    }
    v.truncated = truncated != 0;
    shard.visits.push_back(v);
  }

  std::uint64_t expected_obs = 0;
  for (const VisitRecord& v : shard.visits) expected_obs += v.degree;

  const auto obs_lines = read_lines(obs_path);
  for (std::size_t i = 0; i < obs_lines.size(); ++i) {
    if (shard.observations.size() == expected_obs) {
      std::cerr << "[osnlab] warning: dropping orphan observation tail in "
                << obs_path.string() << "\n";
      break;
    }
    auto fields = split_tabs(obs_lines[i]);
    std::uint64_t a = 0, b = 0;
    if (fields.size() != 2 || !parse_u64(fields[0], a) ||
        !parse_u64(fields[1], b)) {
      if (i + 1 == obs_lines.size()) {
        std::cerr << "[osnlab] warning: truncating corrupt tail record in "
                  << obs_path.string() << "\n";
        break;
      }
      throw ParseError(obs_path.filename().string(), i + 1,
                       "corrupt observation record");
    }
    shard.observations.emplace_back(a, b);
  }
  if (shard.observations.size() < expected_obs)
    throw Error("observation log in " + dir.string() +
                " is shorter than its visit log describes");
  return shard;
}

void write_meta(const std::filesystem::path& dir, const KvFile& meta) {
  const auto tmp = dir / "meta.tmp";
  meta.save(tmp);
  std::filesystem::rename(tmp, dir / "meta");
}

std::filesystem::path queue_file(const std::filesystem::path& dir,
                                 unsigned index) {
  return dir / ("queue." + std::to_string(index) + ".tsv");
}

void save_queue(const std::filesystem::path& path,
                const std::vector<std::uint64_t>& queue) {
  std::ofstream out(path, std::ios::trunc);
  for (std::uint64_t id : queue) out << id << '\n';
  if (!out.flush()) throw Error("cannot write " + path.string());
}

std::vector<std::uint64_t> load_queue(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<std::uint64_t> queue;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::uint64_t id = 0;
    if (!parse_u64(line, id))
      throw ParseError(path.filename().string(), line_no, "bad queue entry");
    queue.push_back(id);
  }
  return queue;
}

// ---------------------------------------------------------------------------
// BFS frontier state, reconstructible from the persisted log.

struct BfsState {
  std::deque<std::pair<std::uint64_t, int>> frontier;  // (id, depth)
  std::unordered_set<std::uint64_t> seen;
  std::uint64_t enqueued = 0;
  bool seeded = false;

  void seed(std::uint64_t id) {
    seeded = true;
    seen.insert(id);
    frontier.emplace_back(id, 0);
    ++enqueued;
  }

  void absorb(const VisitRecord& visit, std::span<const Observation> obs,
              unsigned max_depth) {
    if (visit.outcome != VisitOutcome::visited) return;
    for (const auto& [from, friend_id] : obs) {
      (void)from;
      if (!seen.insert(friend_id).second) continue;
      // A friend first seen at depth max_depth is discovered, not visited.
      if (max_depth == 0 || visit.depth + 1 < static_cast<int>(max_depth)) {
        frontier.emplace_back(friend_id, visit.depth + 1);
        ++enqueued;
      }
    }
  }
};

/// Replays a persisted BFS log, checking it against frontier order.
BfsState replay_bfs(const RawCrawl& crawl, unsigned max_depth) {
  BfsState state;
  if (crawl.visits.empty()) return state;
  state.seed(crawl.visits.front().id);
  std::size_t obs_cursor = 0;
  for (const VisitRecord& visit : crawl.visits) {
    if (state.frontier.empty() || state.frontier.front().first != visit.id ||
        state.frontier.front().second != visit.depth)
      throw Error("persisted BFS log is not a FIFO replay (at id " +
                  std::to_string(visit.id) + ")");
    state.frontier.pop_front();
    std::span<const Observation> slice(crawl.observations.data() + obs_cursor,
                                       visit.degree);
    obs_cursor += visit.degree;
    state.absorb(visit, slice, max_depth);
  }
  return state;
}

RawCrawl run_bfs(const std::string& base_url, const std::string& username,
                 const std::string& password, const CrawlLimits& limits,
                 const std::optional<std::filesystem::path>& out_dir,
                 const CrawlerOptions& options, RawCrawl crawl,
                 BfsState state) {
  const auto start = Clock::now();
  AgentClient client(base_url, options);
  client.login(username, password);

  ShardWriter writer;
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    writer.open(*out_dir, "", ShardData{crawl.visits, crawl.observations});
  }
  auto meta_checkpoint = [&](bool completed) {
    if (!out_dir) return;
    crawl.meta.set_u64("enqueued", crawl.queue.enqueued);
    crawl.meta.set_u64("dequeued", crawl.queue.dequeued);
    crawl.meta.set_u64("throttled_429", crawl.throttled_429);
    crawl.meta.set_u64("retried_errors", crawl.retried_errors);
    crawl.meta.set_u64("completed", completed ? 1 : 0);
    write_meta(*out_dir, crawl.meta);
  };
  meta_checkpoint(false);

  auto record = [&](VisitRecord visit, const std::vector<std::uint64_t>& fr) {
    ++crawl.queue.dequeued;
    crawl.visits.push_back(visit);
    for (std::uint64_t f : fr) crawl.observations.emplace_back(visit.id, f);
    std::span<const Observation> slice(
        crawl.observations.data() + crawl.observations.size() - fr.size(),
        fr.size());
    state.absorb(visit, slice, limits.max_depth);
    crawl.queue.enqueued = state.enqueued;
    writer.record(visit, fr);
  };

  bool budget_hit = false;
  while (true) {
    if (!state.seeded) {
      // First request: the logged-in profile's own list names the seed.
      auto own = client.friends(std::nullopt, limits.max_seconds, start,
                                crawl.throttled_429, crawl.retried_errors);
      if (own.status == -1) {
        budget_hit = true;
        break;
      }
      if (own.status != 200)
        throw HttpError(own.status, "seed friend list unavailable");
      state.seed(own.id);
      crawl.queue.enqueued = state.enqueued;
      state.frontier.pop_front();
      crawl.meta.set_u64("seed_node", own.id);
      record({own.id, VisitOutcome::visited, own.friends.size(),
              own.truncated, 0},
             own.friends);
      continue;
    }
    if (state.frontier.empty()) break;
    if (limits.max_visited > 0 && crawl.visits.size() >= limits.max_visited) {
      budget_hit = true;
      break;
    }
    if (limits.max_seconds > 0 && seconds_since(start) >= limits.max_seconds) {
      budget_hit = true;
      break;
    }

    auto [id, depth] = state.frontier.front();
    auto result = client.friends(id, limits.max_seconds, start,
                                 crawl.throttled_429, crawl.retried_errors);
    if (result.status == -1) {  // duration budget tripped mid-retry
      budget_hit = true;
      break;
    }
    state.frontier.pop_front();

    VisitRecord visit;
    visit.id = id;
    visit.depth = depth;
    switch (result.status) {
      case 200:
        visit.outcome = VisitOutcome::visited;
        visit.degree = result.friends.size();
        visit.truncated = result.truncated;
        break;
      case 404: visit.outcome = VisitOutcome::not_found; break;
      case 403: visit.outcome = VisitOutcome::private_profile; break;
      default: visit.outcome = VisitOutcome::error; break;
    }
    record(visit, result.friends);
  }

  crawl.completed = !budget_hit && state.frontier.empty();
  meta_checkpoint(crawl.completed);
  return crawl;
}

}  // namespace

RawCrawl bfs_crawl(const std::string& base_url, const std::string& username,
                   const std::string& password, const CrawlLimits& limits,
                   const std::optional<std::filesystem::path>& out_dir,
                   const CrawlerOptions& options) {
  limits.validate();
  RawCrawl crawl;
  crawl.kind = "bfs";
  crawl.meta.set("kind", "bfs");
  crawl.meta.set("endpoint", base_url);
  crawl.meta.set("username", username);
  crawl.meta.set_u64("max_depth", limits.max_depth);
  crawl.meta.set_double("max_seconds", limits.max_seconds);
  crawl.meta.set_u64("max_visited", limits.max_visited);
  return run_bfs(base_url, username, password, limits, out_dir, options,
                 std::move(crawl), BfsState{});
}

// ---------------------------------------------------------------------------
// Uniform (rejection sampling) crawler.

namespace {

struct UniAgentResult {
  std::vector<VisitRecord> visits;
  std::vector<Observation> observations;
  std::uint64_t throttled = 0;
  std::uint64_t retried = 0;
};

void run_uni_agent(const std::string& base_url, const std::string& username,
                   const std::string& password,
                   const std::vector<std::uint64_t>& queue,
                   std::size_t start_pos, const CrawlerOptions& options,
                   ShardWriter& writer, UniAgentResult& out) {
  AgentClient client(base_url, options);
  client.login(username, password);
  const auto start = Clock::now();
  for (std::size_t pos = start_pos; pos < queue.size(); ++pos) {
    std::uint64_t id = queue[pos];
    auto result = client.friends(id, 0, start, out.throttled, out.retried);
    VisitRecord visit;
    visit.id = id;
    visit.depth = kDepthUni;
    switch (result.status) {
      case 200:
        visit.outcome = VisitOutcome::visited;
        visit.degree = result.friends.size();
        visit.truncated = result.truncated;
        break;
      case 404: visit.outcome = VisitOutcome::not_found; break;
      case 403: visit.outcome = VisitOutcome::private_profile; break;
      default: visit.outcome = VisitOutcome::error; break;
    }
    out.visits.push_back(visit);
    for (std::uint64_t f : result.friends) out.observations.emplace_back(id, f);
    writer.record(visit, result.friends);
  }
}

RawCrawl run_uniform(const std::string& base_url, const std::string& username,
                     const std::string& password,
                     const std::vector<std::vector<std::uint64_t>>& queues,
                     const std::optional<std::filesystem::path>& out_dir,
                     const CrawlerOptions& options, RawCrawl crawl,
                     std::vector<ShardData> existing) {
  const unsigned agents = static_cast<unsigned>(queues.size());
  existing.resize(agents);

  std::vector<ShardWriter> writers(agents);
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    for (unsigned k = 0; k < agents; ++k) {
      const auto qf = queue_file(*out_dir, k);
      if (!std::filesystem::exists(qf)) save_queue(qf, queues[k]);
      writers[k].open(*out_dir, "." + std::to_string(k), existing[k]);
    }
    crawl.meta.set_u64("completed", 0);
    write_meta(*out_dir, crawl.meta);
  }

  std::vector<UniAgentResult> results(agents);
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> failures(agents);
  for (unsigned k = 0; k < agents; ++k) {
    threads.emplace_back([&, k] {
      try {
        run_uni_agent(base_url, username, password, queues[k],
                      existing[k].visits.size(), options, writers[k],
                      results[k]);
      } catch (...) {
        failures[k] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& failure : failures)
    if (failure) std::rethrow_exception(failure);

  // Merge in agent order: persisted work first, then this run's records.
  for (unsigned k = 0; k < agents; ++k) {
    for (const auto& v : existing[k].visits) crawl.visits.push_back(v);
    for (const auto& o : existing[k].observations)
      crawl.observations.push_back(o);
    for (const auto& v : results[k].visits) crawl.visits.push_back(v);
    for (const auto& o : results[k].observations)
      crawl.observations.push_back(o);
    crawl.throttled_429 += results[k].throttled;
    crawl.retried_errors += results[k].retried;
    crawl.queue.enqueued += queues[k].size();
  }
  crawl.queue.dequeued = crawl.visits.size();
  crawl.completed = true;

  if (out_dir) {
    // Merged files, then the completion mark, then shard cleanup; a crash
    // in between leaves a state resume can still reconcile from shards.
    {
      std::ofstream obs(*out_dir / "observations.tsv", std::ios::trunc);
      std::ofstream visits(*out_dir / "visits.tsv", std::ios::trunc);
      for (const auto& [a, b] : crawl.observations)
        obs << a << '\t' << b << '\n';
      for (const auto& v : crawl.visits) append_visit_line(visits, v);
      obs.flush();
      visits.flush();
      if (!obs || !visits)
        throw Error("cannot write merged harvest in " + out_dir->string());
    }
    crawl.meta.set_u64("enqueued", crawl.queue.enqueued);
    crawl.meta.set_u64("dequeued", crawl.queue.dequeued);
    crawl.meta.set_u64("throttled_429", crawl.throttled_429);
    crawl.meta.set_u64("retried_errors", crawl.retried_errors);
    crawl.meta.set_u64("completed", 1);
    write_meta(*out_dir, crawl.meta);
    for (unsigned k = 0; k < agents; ++k) {
      std::error_code ec;
      std::filesystem::remove(
          *out_dir / ("observations.tsv." + std::to_string(k)), ec);
      std::filesystem::remove(*out_dir / ("visits.tsv." + std::to_string(k)),
                              ec);
    }
  }
  return crawl;
}

}  // namespace

RawCrawl uniform_crawl(const std::string& base_url, const std::string& username,
                       const std::string& password,
                       const std::vector<std::vector<std::uint64_t>>& queues,
                       const std::optional<std::filesystem::path>& out_dir,
                       const CrawlerOptions& options) {
  if (queues.empty()) throw ConfigError("uniform crawl needs at least 1 queue");
  RawCrawl crawl;
  crawl.kind = "uni";
  crawl.meta.set("kind", "uni");
  crawl.meta.set("endpoint", base_url);
  crawl.meta.set("username", username);
  crawl.meta.set_u64("agents", queues.size());
  return run_uniform(base_url, username, password, queues, out_dir, options,
                     std::move(crawl), {});
}

// ---------------------------------------------------------------------------
// Persistence entry points.

void save_raw(const RawCrawl& crawl, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream obs(dir / "observations.tsv", std::ios::trunc);
  std::ofstream visits(dir / "visits.tsv", std::ios::trunc);
  for (const auto& [a, b] : crawl.observations) obs << a << '\t' << b << '\n';
  for (const auto& v : crawl.visits) append_visit_line(visits, v);
  obs.flush();
  visits.flush();
  if (!obs || !visits) throw Error("cannot write harvest in " + dir.string());

  KvFile meta = crawl.meta;
  meta.set("kind", crawl.kind);
  meta.set_u64("enqueued", crawl.queue.enqueued);
  meta.set_u64("dequeued", crawl.queue.dequeued);
  meta.set_u64("throttled_429", crawl.throttled_429);
  meta.set_u64("retried_errors", crawl.retried_errors);
  meta.set_u64("completed", crawl.completed ? 1 : 0);
  write_meta(dir, meta);
}

RawCrawl load_raw(const std::filesystem::path& dir) {
  RawCrawl crawl;
  crawl.meta = KvFile::load(dir / "meta");
  crawl.kind = crawl.meta.require("kind");
  crawl.completed = crawl.meta.get_u64("completed", 0) != 0;
  crawl.queue.enqueued = crawl.meta.get_u64("enqueued", 0);
  crawl.queue.dequeued = crawl.meta.get_u64("dequeued", 0);
  crawl.throttled_429 = crawl.meta.get_u64("throttled_429", 0);
  crawl.retried_errors = crawl.meta.get_u64("retried_errors", 0);

  if (crawl.kind == "uni" && !crawl.completed) {
    const unsigned agents =
        static_cast<unsigned>(crawl.meta.require_u64("agents"));
    for (unsigned k = 0; k < agents; ++k) {
      ShardData shard = load_shard(dir, "." + std::to_string(k));
      for (const auto& v : shard.visits) crawl.visits.push_back(v);
      for (const auto& o : shard.observations) crawl.observations.push_back(o);
    }
    crawl.queue.dequeued = crawl.visits.size();
    return crawl;
  }

  ShardData shard = load_shard(dir, "");
  crawl.visits = std::move(shard.visits);
  crawl.observations = std::move(shard.observations);
  if (!crawl.completed) crawl.queue.dequeued = crawl.visits.size();
  return crawl;
}

RawCrawl resume_bfs(const std::string& base_url, const std::string& username,
                    const std::string& password, const CrawlLimits& limits,
                    const std::filesystem::path& dir,
                    const CrawlerOptions& options) {
  if (!std::filesystem::exists(dir / "meta"))
    return bfs_crawl(base_url, username, password, limits, dir, options);

  RawCrawl crawl = load_raw(dir);
  if (crawl.kind != "bfs")
    throw ConfigError(dir.string() + " holds a '" + crawl.kind + "' crawl");
  if (crawl.completed) return crawl;  // idempotent

  limits.validate();
  const unsigned original_depth =
      static_cast<unsigned>(crawl.meta.require_u64("max_depth"));
  if (limits.max_depth != original_depth)
    throw ConfigError("resume must keep max_depth=" +
                      std::to_string(original_depth));
  BfsState state = replay_bfs(crawl, limits.max_depth);
  crawl.queue.enqueued = state.enqueued;
  crawl.queue.dequeued = crawl.visits.size();
  crawl.meta.set_double("max_seconds", limits.max_seconds);
  crawl.meta.set_u64("max_visited", limits.max_visited);
  return run_bfs(base_url, username, password, limits, dir, options,
                 std::move(crawl), std::move(state));
}

RawCrawl resume_uniform(const std::string& base_url,
                        const std::string& username,
                        const std::string& password,
                        const std::vector<std::vector<std::uint64_t>>& queues,
                        const std::filesystem::path& dir,
                        const CrawlerOptions& options) {
  if (!std::filesystem::exists(dir / "meta"))
    return uniform_crawl(base_url, username, password, queues, dir, options);

  RawCrawl crawl = load_raw(dir);
  if (crawl.kind != "uni")
    throw ConfigError(dir.string() + " holds a '" + crawl.kind + "' crawl");
  if (crawl.completed) return crawl;  // idempotent

  const unsigned agents =
      static_cast<unsigned>(crawl.meta.require_u64("agents"));
  std::vector<std::vector<std::uint64_t>> persisted(agents);
  std::vector<ShardData> shards(agents);
  for (unsigned k = 0; k < agents; ++k) {
    persisted[k] = load_queue(queue_file(dir, k));
    shards[k] = load_shard(dir, "." + std::to_string(k));
    if (shards[k].visits.size() > persisted[k].size())
      throw Error("shard " + std::to_string(k) +
                  " has more visits than queue entries");
  }
  RawCrawl fresh;
  fresh.kind = "uni";
  fresh.meta = crawl.meta;
  return run_uniform(base_url, username, password, persisted, dir, options,
                     std::move(fresh), std::move(shards));
}

}  // namespace osnlab
