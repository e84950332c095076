#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <memory>
#include <thread>

#include "osnlab/crawl.hpp"
#include "osnlab/error.hpp"
#include "osnlab/service.hpp"
#include "osnlab/synth_world.hpp"
#include "test_util.hpp"

using namespace osnlab;
using testutil::TempDir;

namespace {

std::shared_ptr<SyntheticWorld> make_world(
    std::size_t n, std::initializer_list<std::pair<NodeId, NodeId>> edges,
    std::vector<std::uint64_t> ids, std::vector<std::uint8_t> private_flags) {
  auto world = std::make_shared<SyntheticWorld>();
  SocialGraph::Builder builder;
  for (std::size_t i = 0; i < n; ++i) builder.add_node(i);
  for (auto [u, v] : edges) builder.add_edge(u, v);
  world->graph = builder.build();
  world->id_of = std::move(ids);
  world->is_private = std::move(private_flags);
  for (std::size_t i = 0; i < n; ++i)
    world->index_of_id.emplace(world->id_of[i], i);
  world->config.n_users = n;
  world->config.id_space_bits = 16;
  return world;
}

struct LiveService {
  OsnService service;
  std::string url;

  LiveService(std::shared_ptr<SyntheticWorld> world, ServiceConfig cfg)
      : service(world, std::move(cfg)) {
    service.start();
    url = service.base_url();
  }
  ~LiveService() { service.stop(); }  // crawler clients close on scope exit
};

ServiceConfig config_with(std::uint64_t seed_id, std::uint64_t cap = 400,
                          double rate = 0) {
  ServiceConfig cfg;
  cfg.friend_cap = cap;
  cfg.rate_limit = rate;
  cfg.credentials = {{"agent", "pw", seed_id}};
  return cfg;
}

CrawlerOptions fast_options() {
  CrawlerOptions opts;
  opts.backoff_base_seconds = 0.002;
  return opts;
}

}  // namespace

TEST_CASE("bfs on a path visits three levels and discovers the fourth") {
  // a-b-c-d as ids 100-200-300-400, seed a, max_depth 3.
  auto world = make_world(4, {{0, 1}, {1, 2}, {2, 3}},
                          {100, 200, 300, 400}, {0, 0, 0, 0});
  LiveService live(world, config_with(100));

  CrawlLimits limits;
  limits.max_depth = 3;
  RawCrawl crawl = bfs_crawl(live.url, "agent", "pw", limits, std::nullopt);

  REQUIRE(crawl.visits.size() == 3);
  CHECK(crawl.visits[0] == VisitRecord{100, VisitOutcome::visited, 1, false, 0});
  CHECK(crawl.visits[1] == VisitRecord{200, VisitOutcome::visited, 2, false, 1});
  CHECK(crawl.visits[2] == VisitRecord{300, VisitOutcome::visited, 2, false, 2});
  CHECK(crawl.completed);

  // d=400 is discovered through c's list but never visited.
  bool discovered_d = false;
  for (auto [v, f] : crawl.observations)
    if (f == 400) discovered_d = true;
  CHECK(discovered_d);
  CHECK(crawl.queue.dequeued == 3);
}

TEST_CASE("bfs with an isolated seed") {
  auto world = make_world(2, {}, {100, 200}, {0, 0});
  LiveService live(world, config_with(100));
  CrawlLimits limits;
  limits.max_depth = 3;
  RawCrawl crawl = bfs_crawl(live.url, "agent", "pw", limits, std::nullopt);
  REQUIRE(crawl.visits.size() == 1);
  CHECK(crawl.visits[0].id == 100);
  CHECK(crawl.observations.empty());
  CHECK(crawl.completed);
}

TEST_CASE("bfs logs the friend cap truncation") {
  const std::size_t leaves = 450;
  std::vector<std::uint64_t> ids(leaves + 1);
  std::vector<std::uint8_t> priv(leaves + 1, 0);
  ids[0] = 1;
  SocialGraph::Builder b;
  for (std::size_t i = 0; i <= leaves; ++i) b.add_node(i);
  for (std::size_t i = 1; i <= leaves; ++i) {
    ids[i] = 1000 + i;
    b.add_edge(0, i);
  }
  auto world = std::make_shared<SyntheticWorld>();
  world->graph = b.build();
  world->id_of = ids;
  world->is_private = priv;
  for (std::size_t i = 0; i <= leaves; ++i) world->index_of_id.emplace(ids[i], i);
  world->config.n_users = leaves + 1;

  LiveService live(world, config_with(1, 400));
  CrawlLimits limits;
  limits.max_depth = 1;  // visit the seed only, discover its friends
  RawCrawl crawl = bfs_crawl(live.url, "agent", "pw", limits, std::nullopt);

  REQUIRE(crawl.visits.size() == 1);
  CHECK(crawl.visits[0].degree == 400);
  CHECK(crawl.visits[0].truncated);
  CHECK(crawl.observations.size() == 400);
}

TEST_CASE("bfs records private profiles without expanding them") {
  // 100 - 150 - 200(private) - 300. The private node is two hops from the
  // logged-in seed, so its list is withheld and 300 is never discovered.
  // A private DIRECT friend of the seed stays accessible (friends retain
  // access), which the second subcase checks.
  auto world = make_world(4, {{0, 1}, {1, 2}, {2, 3}}, {100, 150, 200, 300},
                          {0, 0, 1, 0});
  LiveService live(world, config_with(100));
  CrawlLimits limits;
  limits.max_depth = 4;
  RawCrawl crawl = bfs_crawl(live.url, "agent", "pw", limits, std::nullopt);

  REQUIRE(crawl.visits.size() == 3);
  CHECK(crawl.visits[2].id == 200);
  CHECK(crawl.visits[2].outcome == VisitOutcome::private_profile);
  CHECK(crawl.visits[2].degree == 0);
  CHECK(crawl.count(VisitOutcome::visited) == 2);
  // 300 was never observed: the private node's list stayed hidden.
  for (auto [v, f] : crawl.observations) CHECK(f != 300);
}

TEST_CASE("a private friend of the seed is still visited") {
  auto world = make_world(3, {{0, 1}, {1, 2}}, {100, 200, 300}, {0, 1, 0});
  LiveService live(world, config_with(100));
  CrawlLimits limits;
  limits.max_depth = 4;
  RawCrawl crawl = bfs_crawl(live.url, "agent", "pw", limits, std::nullopt);
  // Node 200 is private but adjacent to the logged-in profile.
  REQUIRE(crawl.visits.size() == 3);
  CHECK(crawl.visits[1].id == 200);
  CHECK(crawl.visits[1].outcome == VisitOutcome::visited);
}

TEST_CASE("bfs frontier discipline on a generated world") {
  WorldConfig cfg;
  cfg.n_users = 600;
  cfg.gamma = 2.3;
  cfg.min_degree = 2;
  cfg.max_degree = 20;
  cfg.privacy_fraction = 0.2;
  cfg.isolated_fraction = 0;
  cfg.rng_seed = 11;
  auto world = std::make_shared<SyntheticWorld>(generate_world(cfg));
  LiveService live(world, config_with(world->id_of[0], 10));

  CrawlLimits limits;
  limits.max_depth = 3;
  RawCrawl crawl = bfs_crawl(live.url, "agent", "pw", limits, std::nullopt);

  // No node is attempted twice.
  std::unordered_set<std::uint64_t> attempted;
  for (const VisitRecord& v : crawl.visits)
    CHECK(attempted.insert(v.id).second);
  // Depths are non-decreasing in visit order and below max_depth.
  int last_depth = 0;
  for (const VisitRecord& v : crawl.visits) {
    CHECK(v.depth >= last_depth);
    CHECK(v.depth < 3);
    last_depth = v.depth;
  }
  // Observed degree matches the observation count per visit.
  std::unordered_map<std::uint64_t, std::uint64_t> per_visit;
  for (auto [v, f] : crawl.observations) ++per_visit[v];
  for (const VisitRecord& v : crawl.visits)
    if (v.outcome == VisitOutcome::visited)
      CHECK(per_visit[v.id] == v.degree);
}

TEST_CASE("bfs honors the visit budget") {
  auto world = make_world(4, {{0, 1}, {0, 2}, {0, 3}}, {9, 10, 11, 12},
                          {0, 0, 0, 0});
  LiveService live(world, config_with(9));
  CrawlLimits limits;
  limits.max_depth = 3;
  limits.max_visited = 2;
  RawCrawl crawl = bfs_crawl(live.url, "agent", "pw", limits, std::nullopt);
  CHECK(crawl.visits.size() == 2);
  CHECK_FALSE(crawl.completed);
}

TEST_CASE("crawl limits validation") {
  CrawlLimits limits;
  limits.max_depth = 0;
  limits.max_seconds = 0;
  limits.max_visited = 0;
  CHECK_THROWS_AS(limits.validate(), ConfigError);
  limits.max_visited = 5;
  limits.validate();
}

TEST_CASE("uniform queue generation") {
  auto queue = generate_uniform_queue(1 << 16, 32, 99);
  CHECK(queue.size() == 65536);
  for (std::uint64_t id : queue) CHECK(id < (std::uint64_t(1) << 32));

  // Mean near the middle of the space (standard uniform-mean test).
  double mean = 0;
  for (std::uint64_t id : queue) mean += double(id);
  mean /= double(queue.size());
  const double space = std::pow(2.0, 32);
  const double sigma = space / std::sqrt(12.0 * double(queue.size()));
  CHECK(std::abs(mean - space / 2) < 3 * sigma);

  // Reproducible per seed; different streams differ.
  CHECK(generate_uniform_queue(1 << 16, 32, 99) == queue);
  CHECK(generate_uniform_queue(1 << 16, 32, 100) != queue);
  CHECK(uniform_queue_seed(5, 0) != uniform_queue_seed(5, 1));
}

TEST_CASE("uniform crawl classifies hits, privates and misses") {
  WorldConfig cfg;
  cfg.n_users = 1 << 10;
  cfg.gamma = 2.5;
  cfg.min_degree = 2;
  cfg.max_degree = 30;
  cfg.privacy_fraction = 0.25;
  cfg.isolated_fraction = 0;
  cfg.rng_seed = 5;
  auto world = std::make_shared<SyntheticWorld>(generate_world(cfg));
  REQUIRE(world->config.id_space_bits == 13);  // density 1/8
  LiveService live(world, config_with(world->id_of[0]));

  SUBCASE("a queue of 80 random ids hits roughly one in eight") {
    auto queue = generate_uniform_queue(80, 13, 4242);
    RawCrawl crawl =
        uniform_crawl(live.url, "agent", "pw", {queue}, std::nullopt);
    REQUIRE(crawl.visits.size() == 80);
    const std::uint64_t existing = crawl.count(VisitOutcome::visited) +
                                   crawl.count(VisitOutcome::private_profile);
    // Binomial(80, 1/8): central mass; generous 4-sigma bounds.
    CHECK(existing >= 1);
    CHECK(existing <= 25);
    CHECK(crawl.count(VisitOutcome::error) == 0);
    CHECK(crawl.completed);
    // Every hit is a genuinely assigned id; every miss is not.
    for (const VisitRecord& v : crawl.visits) {
      if (v.outcome == VisitOutcome::not_found)
        CHECK_FALSE(world->is_id_assigned(v.id));
      else
        CHECK(world->is_id_assigned(v.id));
    }
  }
  SUBCASE("a queue of one unassigned id yields one rejection") {
    std::uint64_t missing = 0;
    while (world->is_id_assigned(missing)) ++missing;
    RawCrawl crawl =
        uniform_crawl(live.url, "agent", "pw", {{missing}}, std::nullopt);
    REQUIRE(crawl.visits.size() == 1);
    CHECK(crawl.visits[0].outcome == VisitOutcome::not_found);
    CHECK(crawl.observations.empty());
  }
  SUBCASE("agents run concurrently and merge in agent order") {
    std::vector<std::vector<std::uint64_t>> queues;
    for (unsigned k = 0; k < 4; ++k)
      queues.push_back(generate_uniform_queue(50, 13, uniform_queue_seed(7, k)));
    RawCrawl crawl = uniform_crawl(live.url, "agent", "pw", queues, std::nullopt);
    REQUIRE(crawl.visits.size() == 200);
    CHECK(crawl.queue.enqueued == 200);
    // Per-agent order is preserved: segment k mirrors queue k.
    std::size_t cursor = 0;
    for (unsigned k = 0; k < 4; ++k)
      for (std::uint64_t id : queues[k]) CHECK(crawl.visits[cursor++].id == id);
  }
}

TEST_CASE("crawler honors 429 Retry-After") {
  auto world = make_world(3, {{0, 1}, {0, 2}}, {5, 6, 7}, {0, 0, 0});
  ServiceConfig cfg = config_with(5);
  cfg.rate_limit = 50;
  LiveService live(world, cfg);

  // 3 queue entries beyond the bucket: the crawl must finish with zero
  // errors, recording the throttle events it waited through.
  std::vector<std::uint64_t> queue(120, 6);
  RawCrawl crawl = uniform_crawl(live.url, "agent", "pw", {queue}, std::nullopt);
  CHECK(crawl.visits.size() == 120);
  CHECK(crawl.count(VisitOutcome::error) == 0);
  CHECK(crawl.throttled_429 >= 1);
}

TEST_CASE("transient 5xx responses are retried with backoff") {
  // A bare-bones protocol double that fails twice before serving.
  httplib::Server flaky;
  std::atomic<int> failures_left{2};
  flaky.Post("/login", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Set-Cookie", "session=t0ken; Path=/");
    res.set_content("{\"ok\":true}", "application/json");
  });
  flaky.Get("/friends", [&](const httplib::Request&, httplib::Response& res) {
    if (failures_left.fetch_sub(1) > 0) {
      res.status = 500;
      return;
    }
    res.set_content("{\"id\":1,\"friends\":[],\"truncated\":false}",
                    "application/json");
  });
  const int port = flaky.bind_to_any_port("127.0.0.1");
  std::thread server([&] { flaky.listen_after_bind(); });
  while (!flaky.is_running())
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  const std::string url = "http://127.0.0.1:" + std::to_string(port);

  SUBCASE("recovers within the attempt budget") {
    RawCrawl crawl =
        uniform_crawl(url, "agent", "pw", {{1}}, std::nullopt, fast_options());
    REQUIRE(crawl.visits.size() == 1);
    CHECK(crawl.visits[0].outcome == VisitOutcome::visited);
    CHECK(crawl.retried_errors == 2);
  }
  SUBCASE("gives up after three attempts and continues") {
    failures_left = 1000;
    RawCrawl crawl = uniform_crawl(url, "agent", "pw", {{1, 1}}, std::nullopt,
                                   fast_options());
    REQUIRE(crawl.visits.size() == 2);
    CHECK(crawl.visits[0].outcome == VisitOutcome::error);
    CHECK(crawl.visits[1].outcome == VisitOutcome::error);
  }

  flaky.stop();
  server.join();
}

TEST_CASE("bfs persist, crash and resume") {
  WorldConfig cfg;
  cfg.n_users = 500;
  cfg.gamma = 2.5;
  cfg.min_degree = 2;
  cfg.max_degree = 15;
  cfg.privacy_fraction = 0.2;
  cfg.isolated_fraction = 0;
  cfg.rng_seed = 77;
  auto world = std::make_shared<SyntheticWorld>(generate_world(cfg));
  LiveService live(world, config_with(world->id_of[0], 10));

  CrawlLimits full;
  full.max_depth = 3;

  // The uninterrupted reference run.
  RawCrawl reference = bfs_crawl(live.url, "agent", "pw", full, std::nullopt);
  REQUIRE(reference.visits.size() >= 10);

  SUBCASE("graceful interrupt then resume matches the reference") {
    TempDir dir("bfs_resume");
    CrawlLimits interrupted = full;
    interrupted.max_visited = 5;
    RawCrawl partial =
        bfs_crawl(live.url, "agent", "pw", interrupted, dir.path());
    CHECK_FALSE(partial.completed);
    CHECK(partial.visits.size() == 5);

    RawCrawl resumed = resume_bfs(live.url, "agent", "pw", full, dir.path());
    CHECK(resumed.completed);
    CHECK(resumed.visits == reference.visits);
    CHECK(resumed.observations == reference.observations);

    // Idempotent once complete.
    RawCrawl again = resume_bfs(live.url, "agent", "pw", full, dir.path());
    CHECK(again.visits == reference.visits);
  }
  SUBCASE("corrupt tail is truncated and the crawl still converges") {
    TempDir dir("bfs_crash");
    CrawlLimits slice = full;
    slice.max_visited = 7;
    bfs_crawl(live.url, "agent", "pw", slice, dir.path());

    // Simulated crash: chop bytes mid-record and mark incomplete.
    {
      auto visits_path = dir.path() / "visits.tsv";
      auto size = std::filesystem::file_size(visits_path);
      std::filesystem::resize_file(visits_path, size - 7);
      KvFile meta = KvFile::load(dir.path() / "meta");
      meta.set_u64("completed", 0);
      meta.save(dir.path() / "meta");
    }
    RawCrawl resumed = resume_bfs(live.url, "agent", "pw", full, dir.path());
    CHECK(resumed.completed);
    CHECK(resumed.visits == reference.visits);
    CHECK(resumed.observations == reference.observations);
  }
  SUBCASE("resume on an empty dir starts fresh") {
    TempDir dir("bfs_fresh");
    RawCrawl fresh = resume_bfs(live.url, "agent", "pw", full, dir.path());
    CHECK(fresh.completed);
    CHECK(fresh.visits == reference.visits);

    RawCrawl loaded = load_raw(dir.path());
    CHECK(loaded.visits == reference.visits);
    CHECK(loaded.observations == reference.observations);
    CHECK(loaded.completed);
  }
  SUBCASE("resume with a different depth is rejected") {
    TempDir dir("bfs_depth");
    CrawlLimits slice = full;
    slice.max_visited = 3;
    bfs_crawl(live.url, "agent", "pw", slice, dir.path());
    CrawlLimits other = full;
    other.max_depth = 2;
    CHECK_THROWS_AS(resume_bfs(live.url, "agent", "pw", other, dir.path()),
                    ConfigError);
  }
}

TEST_CASE("uniform crawl persists shards and resumes by queue position") {
  WorldConfig cfg;
  cfg.n_users = 512;
  cfg.gamma = 2.5;
  cfg.min_degree = 2;
  cfg.max_degree = 15;
  cfg.privacy_fraction = 0.25;
  cfg.isolated_fraction = 0;
  cfg.rng_seed = 31;
  auto world = std::make_shared<SyntheticWorld>(generate_world(cfg));
  LiveService live(world, config_with(world->id_of[0]));

  std::vector<std::vector<std::uint64_t>> queues;
  for (unsigned k = 0; k < 2; ++k)
    queues.push_back(generate_uniform_queue(
        60, world->config.id_space_bits, uniform_queue_seed(3, k)));

  TempDir complete_dir("uni_complete");
  RawCrawl reference =
      uniform_crawl(live.url, "agent", "pw", queues, complete_dir.path());
  REQUIRE(reference.completed);
  {
    RawCrawl loaded = load_raw(complete_dir.path());
    CHECK(loaded.visits == reference.visits);
    CHECK(loaded.observations == reference.observations);
  }

  SUBCASE("fabricated mid-crawl state resumes to the same harvest") {
    TempDir dir("uni_resume");
    // Reconstruct an interrupted layout: per-agent shard prefixes.
    std::filesystem::copy_file(complete_dir.path() / "queue.0.tsv",
                               dir.path() / "queue.0.tsv");
    std::filesystem::copy_file(complete_dir.path() / "queue.1.tsv",
                               dir.path() / "queue.1.tsv");
    const std::size_t cut0 = 23, cut1 = 41;
    for (unsigned k = 0; k < 2; ++k) {
      const std::size_t cut = k == 0 ? cut0 : cut1;
      const std::size_t base = k == 0 ? 0 : queues[0].size();
      std::ofstream visits(dir.path() / ("visits.tsv." + std::to_string(k)));
      std::ofstream obs(dir.path() /
                        ("observations.tsv." + std::to_string(k)));
      std::size_t obs_cursor = 0;
      for (std::size_t i = 0; i < queues[0].size(); ++i) {
        const VisitRecord& v = reference.visits[base + i];
        std::size_t obs_base = 0;
        for (std::size_t j = 0; j < base + i; ++j)
          obs_base += reference.visits[j].degree;
        if (i < cut) {
          for (std::size_t o = 0; o < v.degree; ++o)
            obs << reference.observations[obs_base + o].first << '\t'
                << reference.observations[obs_base + o].second << '\n';
          visits << v.id << '\t' << to_string(v.outcome) << '\t' << v.degree
                 << '\t' << (v.truncated ? 1 : 0) << '\t' << v.depth << '\n';
          obs_cursor += v.degree;
        }
      }
    }
    KvFile meta;
    meta.set("kind", "uni");
    meta.set("endpoint", live.url);
    meta.set("username", "agent");
    meta.set_u64("agents", 2);
    meta.set_u64("completed", 0);
    meta.save(dir.path() / "meta");

    RawCrawl resumed = resume_uniform(live.url, "agent", "pw", {}, dir.path());
    CHECK(resumed.completed);
    CHECK(resumed.visits == reference.visits);
    CHECK(resumed.observations == reference.observations);
  }
  SUBCASE("resume of a completed crawl does not touch the network") {
    RawCrawl resumed = resume_uniform("http://127.0.0.1:1", "agent", "pw", {},
                                      complete_dir.path());
    CHECK(resumed.visits == reference.visits);
  }
  SUBCASE("resume on an empty dir starts fresh") {
    TempDir dir("uni_fresh");
    RawCrawl fresh = resume_uniform(live.url, "agent", "pw", queues, dir.path());
    CHECK(fresh.visits == reference.visits);
    CHECK(fresh.observations == reference.observations);
  }
}

TEST_CASE("load_raw drops orphan observation tails") {
  TempDir dir("orphan");
  RawCrawl crawl;
  crawl.kind = "uni";
  crawl.visits.push_back({10, VisitOutcome::visited, 1, false, -1});
  crawl.observations.emplace_back(10, 20);
  crawl.completed = true;
  save_raw(crawl, dir.path());
  // Orphans past the described observations, as a crash would leave.
  {
    std::ofstream obs(dir.path() / "observations.tsv", std::ios::app);
    obs << "10\t30\n10\t4";  // one full orphan, one torn line
  }
  RawCrawl loaded = load_raw(dir.path());
  CHECK(loaded.observations == crawl.observations);
  CHECK(loaded.visits == crawl.visits);
}
