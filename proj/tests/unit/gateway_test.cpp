#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include "finnews/gateway.hpp"
#include "finnews/text.hpp"
#include "support.hpp"

using namespace finnews;
using Fault = MockBackend::Fault;

namespace {

struct Recorder {
  std::vector<std::chrono::milliseconds> sleeps;
  Sleeper sleeper() {
    return [this](std::chrono::milliseconds d) { sleeps.push_back(d); };
  }
};

GatewayConfig fast_config(int retries = 3) {
  GatewayConfig c;
  c.max_retries = retries;
  c.backoff_base = std::chrono::milliseconds(10);
  return c;
}

}  // namespace

TEST(Gateway, MockFixtureServedOnFirstAttempt) {
  auto mock = std::make_shared<MockBackend>();
  mock->register_fixture("p", "the text");
  Gateway gw(mock, fast_config());
  const auto r = gw.complete("p", {});
  EXPECT_EQ(r.text, "the text");
  EXPECT_EQ(r.attempt_count, 1);
  EXPECT_EQ(r.backend_id, "mock");
  EXPECT_EQ(gw.complete("p", {}).text, r.text);
}

TEST(Gateway, RetriesThenSucceeds) {
  auto mock = std::make_shared<MockBackend>();
  mock->register_fixture("p", "ok");
  mock->inject_faults("p", {Fault::transport, Fault::server_error});
  Recorder rec;
  Gateway gw(mock, fast_config(), rec.sleeper());
  const auto r = gw.complete("p", {});
  EXPECT_EQ(r.attempt_count, 3);
  EXPECT_EQ(r.text, "ok");
  ASSERT_EQ(rec.sleeps.size(), 2u);
  EXPECT_EQ(rec.sleeps[0].count(), 10);
  EXPECT_EQ(rec.sleeps[1].count(), 20);
}

TEST(Gateway, RetriesExhausted) {
  auto mock = std::make_shared<MockBackend>();
  mock->register_fixture("p", "ok");
  mock->fail_always("p", Fault::server_error);
  Recorder rec;
  Gateway gw(mock, fast_config(2), rec.sleeper());
  try {
    gw.complete("p", {});
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), GatewayErrorKind::retries_exhausted);
    EXPECT_EQ(e.attempts(), 3);
  }
  EXPECT_EQ(mock->request_count(), 3u);
  EXPECT_EQ(rec.sleeps.size(), 2u);
}

TEST(Gateway, TimeoutsReportTimeoutKind) {
  auto mock = std::make_shared<MockBackend>();
  mock->fail_always("p", Fault::timeout);
  Gateway gw(mock, fast_config(1), [](auto) {});
  try {
    gw.complete("p", {});
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), GatewayErrorKind::timeout);
  }
}

TEST(Gateway, EmptyBodyIsMalformed) {
  auto mock = std::make_shared<MockBackend>();
  mock->register_fixture("p", "ok");
  mock->inject_faults("p", {Fault::empty_body});
  Gateway gw(mock, fast_config(), [](auto) {});
  try {
    gw.complete("p", {});
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), GatewayErrorKind::malformed_payload);
    EXPECT_EQ(e.attempts(), 1);
  }
  mock->inject_faults("p", {Fault::not_json});
  try {
    gw.complete("p", {});
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), GatewayErrorKind::malformed_payload);
  }
}

TEST(Gateway, EmptyFixtureTextIsMalformed) {
  auto mock = std::make_shared<MockBackend>();
  mock->register_fixture("p", "");
  Gateway gw(mock, fast_config(), [](auto) {});
  EXPECT_THROW(gw.complete("p", {}), GatewayError);
}

TEST(Gateway, ClientErrorNotRetried) {
  auto mock = std::make_shared<MockBackend>();
  mock->fail_always("p", Fault::client_error);
  Gateway gw(mock, fast_config(), [](auto) {});
  try {
    gw.complete("p", {});
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), GatewayErrorKind::client_error);
  }
  EXPECT_EQ(mock->request_count(), 1u);
}

TEST(Gateway, FixtureMiss) {
  Gateway gw(std::make_shared<MockBackend>(), fast_config(), [](auto) {});
  try {
    gw.complete("unknown", {});
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), GatewayErrorKind::fixture_miss);
  }
}

TEST(Gateway, InvalidRequests) {
  auto mock = std::make_shared<MockBackend>();
  Gateway gw(mock, fast_config(), [](auto) {});
  EXPECT_THROW(gw.complete("", {}), GatewayError);
  GenerationParams bad;
  bad.max_new_tokens = 0;
  EXPECT_THROW(gw.complete("p", bad), GatewayError);
  EXPECT_THROW(Gateway(nullptr), std::invalid_argument);
}

TEST(MockBackend, ReRegisterReplaces) {
  auto mock = std::make_shared<MockBackend>();
  const auto first = mock->register_fixture("p", "old");
  const auto second = mock->register_fixture("p", "new");
  EXPECT_FALSE(first.replaced);
  EXPECT_TRUE(second.replaced);
  EXPECT_EQ(first.fixture_id, sha256_hex("p"));
  EXPECT_EQ(Gateway(mock).complete("p", {}).text, "new");
  EXPECT_EQ(mock->fixture_count(), 1u);
}

TEST(MockBackend, FixtureFileRoundtrip) {
  finnews::testing::TempDir dir;
  MockBackend a;
  a.register_fixture("p1", "one\nline two");
  a.register_fixture("p2", "two");
  a.save_fixtures(dir / "fx.jsonl");
  auto b = std::make_shared<MockBackend>();
  EXPECT_EQ(b->load_fixtures(dir / "fx.jsonl"), 2u);
  EXPECT_EQ(Gateway(b).complete("p1", {}).text, "one\nline two");

  finnews::testing::write_file(dir / "bad.jsonl", "{\"prompt_sha256\":\"xyz\",\"text\":\"t\"}\n");
  EXPECT_THROW(b->load_fixtures(dir / "bad.jsonl"), std::runtime_error);
}

TEST(Gateway, WireRequestShape) {
  GenerationParams p;
  p.stop_sequences = {"</s>"};
  const auto j = make_wire_request("hello", p);
  EXPECT_EQ(j["prompt"], "hello");
  EXPECT_EQ(j["max_new_tokens"], 1024);
  EXPECT_EQ(j["temperature"], 0.0);
  EXPECT_EQ(j["stop"], nlohmann::json::array({"</s>"}));
}

TEST(CompleteBatch, SequentialKeepsOrder) {
  auto mock = std::make_shared<MockBackend>();
  std::vector<std::string> prompts;
  for (int i = 0; i < 5; ++i) {
    prompts.push_back("p" + std::to_string(i));
    mock->register_fixture(prompts.back(), "r" + std::to_string(i));
  }
  const auto results = Gateway(mock).complete_batch(prompts, {}, 1);
  ASSERT_EQ(results.size(), 5u);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(std::get<CompletionResult>(results[i]).text, "r" + std::to_string(i));
  }
}

TEST(CompleteBatch, PositionedFailure) {
  auto mock = std::make_shared<MockBackend>();
  std::vector<std::string> prompts;
  for (int i = 0; i < 5; ++i) {
    prompts.push_back("p" + std::to_string(i));
    mock->register_fixture(prompts.back(), "r" + std::to_string(i));
  }
  mock->fail_always("p2", Fault::client_error);
  const auto results = Gateway(mock, fast_config(), [](auto) {}).complete_batch(prompts, {}, 3);
  int ok = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (i == 2) {
      ASSERT_TRUE(std::holds_alternative<Gateway::Failure>(results[i]));
      EXPECT_EQ(std::get<Gateway::Failure>(results[i]).kind, GatewayErrorKind::client_error);
    } else {
      ASSERT_TRUE(std::holds_alternative<CompletionResult>(results[i]));
      ++ok;
    }
  }
  EXPECT_EQ(ok, 4);
}

TEST(CompleteBatch, ConcurrencyBounded) {
  auto mock = std::make_shared<MockBackend>();
  mock->set_latency(std::chrono::milliseconds(2));
  std::vector<std::string> prompts;
  for (int i = 0; i < 100; ++i) {
    prompts.push_back("p" + std::to_string(i));
    mock->register_fixture(prompts.back(), "r");
  }
  const auto results = Gateway(mock).complete_batch(prompts, {}, 8);
  EXPECT_EQ(results.size(), 100u);
  EXPECT_LE(mock->max_in_flight(), 8u);
  EXPECT_GE(mock->max_in_flight(), 2u);
  EXPECT_EQ(mock->request_count(), 100u);
  EXPECT_THROW(Gateway(mock).complete_batch(prompts, {}, 0), std::invalid_argument);
  EXPECT_TRUE(Gateway(mock).complete_batch({}, {}, 4).empty());
}

TEST(GatewayEnv, Overrides) {
  ::setenv("FINNEWS_LLM_URL", "http://example.test:9/v1", 1);
  ::setenv("FINNEWS_LLM_TIMEOUT_S", "2.5", 1);
  ::setenv("FINNEWS_LLM_RETRIES", "5", 1);
  const auto c = gateway_config_from_env();
  ::unsetenv("FINNEWS_LLM_URL");
  ::unsetenv("FINNEWS_LLM_TIMEOUT_S");
  ::unsetenv("FINNEWS_LLM_RETRIES");
  EXPECT_EQ(c.url, "http://example.test:9/v1");
  EXPECT_EQ(c.timeout.count(), 2500);
  EXPECT_EQ(c.max_retries, 5);
}

class HttpBackendTest : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/generate", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits_;
      auth_ = req.get_header_value("Authorization");
      const auto body = nlohmann::json::parse(req.body);
      if (hits_ <= fail_first_) {
        res.status = 503;
        return;
      }
      res.set_content(nlohmann::json{{"text", "echo: " + body["prompt"].get<std::string>()}}.dump(),
                      "application/json");
    });
    server_.Post("/bad", [](const httplib::Request&, httplib::Response& res) {
      res.status = 422;
      res.set_content("{}", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  GatewayConfig config(const std::string& path) {
    GatewayConfig c = fast_config();
    c.url = "http://127.0.0.1:" + std::to_string(port_) + path;
    c.api_key = "secret";
    c.timeout = std::chrono::milliseconds(5000);
    return c;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  int fail_first_ = 0;
  std::string auth_;
};

TEST_F(HttpBackendTest, PostsAndParses) {
  fail_first_ = 1;
  const auto c = config("/generate");
  Gateway gw(std::make_shared<HttpBackend>(c), c, [](auto) {});
  const auto r = gw.complete("hi", {});
  EXPECT_EQ(r.text, "echo: hi");
  EXPECT_EQ(r.attempt_count, 2);
  EXPECT_EQ(auth_, "Bearer secret");
}

TEST_F(HttpBackendTest, ClientErrorStatus) {
  const auto c = config("/bad");
  Gateway gw(std::make_shared<HttpBackend>(c), c, [](auto) {});
  try {
    gw.complete("hi", {});
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), GatewayErrorKind::client_error);
  }
}

TEST(HttpBackend, UnreachableHostExhaustsRetries) {
  GatewayConfig c = fast_config(1);
  c.url = "http://127.0.0.1:1/generate";
  c.timeout = std::chrono::milliseconds(500);
  Gateway gw(std::make_shared<HttpBackend>(c), c, [](auto) {});
  try {
    gw.complete("hi", {});
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_TRUE(e.kind() == GatewayErrorKind::retries_exhausted || e.kind() == GatewayErrorKind::timeout);
    EXPECT_EQ(e.attempts(), 2);
  }
}

TEST(HttpBackend, RejectsBadUrl) {
  GatewayConfig c;
  c.url = "ftp://x";
  EXPECT_THROW(HttpBackend{c}, std::invalid_argument);
}
