#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <atomic>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "mileaks/attacks.hpp"
#include "mileaks/blackbox.hpp"
#include "mileaks/datasets.hpp"
#include "testutil.hpp"

using namespace mileaks;

namespace {

std::shared_ptr<const Predictor> uniform_logistic(std::size_t d, int c) {
  NetState state(NetSpec{d, 0, c},
                 std::vector<double>(d * static_cast<std::size_t>(c) +
                                         static_cast<std::size_t>(c),
                                     0.0));
  return std::make_shared<FeedForwardNet>(LearnerKind::Logistic,
                                          std::move(state));
}

template <typename T>
concept ExposesParameters = requires(T box) { box.parameters(); } ||
                            requires(T box) { box.underlying(); } ||
                            requires(T box) { box.model(); };

static_assert(!ExposesParameters<ModelBlackBox>);
static_assert(!ExposesParameters<HttpBlackBox>);

}  // namespace

TEST_CASE("queries return posteriors and count exactly") {
  ModelBlackBox box(uniform_logistic(3, 4));
  CHECK(box.query_count() == 0);
  const std::vector<double> x{0.5, 0.25, 0.125};
  const auto p = box.query(x);
  CHECK(box.query_count() == 1);
  for (std::size_t k = 0; k < 4; ++k)
    CHECK(p[k] == doctest::Approx(0.25).epsilon(1e-12));

  const auto q = box.query(x);
  CHECK(box.query_count() == 2);
  CHECK(p == q);
}

TEST_CASE("failed queries do not count") {
  ModelBlackBox box(uniform_logistic(3, 4));
  CHECK_THROWS_AS(box.query(std::vector<double>{1.0}), ValidationError);
  CHECK(box.query_count() == 0);
  CHECK_THROWS_AS(box.query(std::vector<double>{1.0, std::nan(""), 0.0}),
                  ValidationError);
  CHECK(box.query_count() == 0);
}

TEST_CASE("the counter is exact under concurrent queries") {
  ModelBlackBox box(uniform_logistic(2, 3));
  std::vector<std::thread> pool;
  for (int t = 0; t < 8; ++t)
    pool.emplace_back([&box] {
      const std::vector<double> x{0.5, 0.5};
      for (int i = 0; i < 100; ++i) box.query(x);
    });
  for (auto& th : pool) th.join();
  CHECK(box.query_count() == 800);
}

TEST_CASE("served model answers bit-identically to in-process queries") {
  const auto model = uniform_logistic(3, 5);
  auto box = std::make_shared<ModelBlackBox>(model);
  BlackBoxServer server(box);
  const int port = server.start("127.0.0.1", 0);
  REQUIRE(port > 0);

  Rng rng(61);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> x(3);
    for (double& v : x) v = rng.uniform(-2.0, 2.0);
    const auto remote = http_query("127.0.0.1", port, x);
    const auto local = model->predict(x);
    CHECK(remote == local);
  }
  CHECK(http_query_count("127.0.0.1", port) == 10);
  server.stop();
}

TEST_CASE("malformed requests get a 400 and do not count") {
  auto box = std::make_shared<ModelBlackBox>(uniform_logistic(2, 2));
  BlackBoxServer server(box);
  const int port = server.start("127.0.0.1", 0);

  httplib::Client client("127.0.0.1", port);
  const auto empty = client.Post("/predict", "{}", "application/json");
  REQUIRE(empty);
  CHECK(empty->status == 400);
  CHECK(empty->body.find("error") != std::string::npos);

  const auto garbage = client.Post("/predict", "not json", "application/json");
  REQUIRE(garbage);
  CHECK(garbage->status == 400);

  const auto wrong_dim =
      client.Post("/predict", R"({"features":[1.0]})", "application/json");
  REQUIRE(wrong_dim);
  CHECK(wrong_dim->status == 400);

  CHECK(box->query_count() == 0);
  CHECK_THROWS_AS(http_query("127.0.0.1", port, std::vector<double>{1.0}),
                  ValidationError);
  CHECK(box->query_count() == 0);
  server.stop();
}

TEST_CASE("unreachable servers raise transport errors") {
  CHECK_THROWS_AS(http_query("127.0.0.1", 1, std::vector<double>{1.0}),
                  TransportError);
  CHECK_THROWS_AS(http_query_count("127.0.0.1", 1), TransportError);
}

TEST_CASE("query ids count successful predictions") {
  auto box = std::make_shared<ModelBlackBox>(uniform_logistic(2, 2));
  BlackBoxServer server(box);
  const int port = server.start("127.0.0.1", 0);
  httplib::Client client("127.0.0.1", port);
  const auto first =
      client.Post("/predict", R"({"features":[0.5,0.5]})", "application/json");
  REQUIRE(first);
  CHECK(first->body.find("\"query_id\":1") != std::string::npos);
  const auto stats = client.Get("/stats");
  REQUIRE(stats);
  CHECK(stats->body.find("\"queries\":1") != std::string::npos);
  server.stop();
}

TEST_CASE("adversary1 over the wire matches the in-process run") {
  SyntheticSpec spec;
  spec.kind = SyntheticSpec::Kind::GaussianBlobs;
  spec.num_points = 80;
  spec.num_classes = 3;
  spec.dimensionality = 3;
  spec.class_separation = 0.5;
  spec.noise = 0.3;
  spec.seed = 62;
  const Dataset data = generate(spec);
  const SplitPlan plan = plan_standard_split(data, 63);

  TrainConfig target_cfg;
  target_cfg.learner_kind = LearnerKind::Mlp;
  target_cfg.hidden_units = 16;
  target_cfg.epochs = 40;
  target_cfg.batch_size = 8;
  target_cfg.learning_rate = 0.3;
  target_cfg.seed = 64;
  TrainConfig shadow_cfg = target_cfg;
  shadow_cfg.seed = 65;
  TrainConfig attack_cfg = target_cfg;
  attack_cfg.hidden_units = 8;
  attack_cfg.epochs = 100;
  attack_cfg.seed = 66;

  std::shared_ptr<const Predictor> target =
      train(data, plan.part("target_train"), target_cfg);

  ModelBlackBox local(target);
  const auto in_process =
      adversary1(shadow_cfg, attack_cfg, data, plan, local);

  auto served = std::make_shared<ModelBlackBox>(target);
  BlackBoxServer server(served);
  const int port = server.start("127.0.0.1", 0);
  HttpBlackBox remote("127.0.0.1", port, data.dimensionality(),
                      data.num_classes());
  const auto over_wire = adversary1(shadow_cfg, attack_cfg, data, plan, remote);
  server.stop();

  CHECK(in_process.decisions == over_wire.decisions);
  CHECK(in_process.scores == over_wire.scores);
  CHECK(in_process.queries_spent == over_wire.queries_spent);
}
