#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mock_backend.hpp"
#include "sdft/inference_client.hpp"

using namespace sdft;
using sdft_test::MockBackend;

namespace {

BackendConfig fast_config(const MockBackend& mock) {
  BackendConfig c;
  c.base_url = mock.url();
  c.model = "mock";
  c.retries = 3;
  c.backoff_initial_ms = 5;
  c.timeout_s = 10;
  return c;
}

}  // namespace

TEST_CASE("complete echoes the mock text") {
  MockBackend mock;
  mock.set_responder([](const std::string&) { return "OK"; });
  InferenceClient client(fast_config(mock));
  auto r = client.complete({.prompt = "hi"});
  CHECK(r.text == "OK");
  CHECK(r.finish_reason == FinishReason::stop);
  CHECK(r.latency_ms >= 0.0);
}

TEST_CASE("complete retries 5xx then succeeds") {
  MockBackend mock;
  mock.set_status_script({500, 500, 200});
  mock.set_responder([](const std::string&) { return "recovered"; });
  InferenceClient client(fast_config(mock));
  auto r = client.complete({.prompt = "hi"});
  CHECK(r.text == "recovered");
  CHECK(mock.completion_calls() == 3);
}

TEST_CASE("4xx fails immediately with no retry") {
  MockBackend mock;
  mock.set_status_script({401});
  InferenceClient client(fast_config(mock));
  try {
    client.complete({.prompt = "hi"});
    FAIL("expected ClientError");
  } catch (const ClientError& e) {
    CHECK(e.http_status == 401);
  }
  CHECK(mock.completion_calls() == 1);
}

TEST_CASE("exhausted retries carry the last status") {
  MockBackend mock;
  mock.set_status_script({503, 503, 503, 503, 503});
  auto cfg = fast_config(mock);
  cfg.retries = 2;
  InferenceClient client(cfg);
  try {
    client.complete({.prompt = "hi"});
    FAIL("expected ClientError");
  } catch (const ClientError& e) {
    CHECK(e.http_status == 503);
  }
  CHECK(mock.completion_calls() == 3);  // 1 + 2 retries
}

TEST_CASE("complete_batch preserves order under bounded parallelism") {
  MockBackend mock;
  mock.set_delay_ms(30);
  mock.set_responder([](const std::string& prompt) { return "echo:" + prompt; });
  InferenceClient client(fast_config(mock));

  std::vector<GenerationRequest> reqs;
  for (int i = 0; i < 10; ++i) reqs.push_back({.prompt = std::to_string(i)});
  auto results = client.complete_batch(reqs, 3);
  REQUIRE(results.size() == 10);
  for (int i = 0; i < 10; ++i) CHECK(results[i].text == "echo:" + std::to_string(i));
  CHECK(mock.max_in_flight() <= 3);
  CHECK(mock.max_in_flight() >= 2);  // the pool actually ran concurrently
}

TEST_CASE("complete_batch empty list") {
  MockBackend mock;
  InferenceClient client(fast_config(mock));
  CHECK(client.complete_batch({}, 4).empty());
}

TEST_CASE("complete_batch per-item failure does not abort the batch") {
  MockBackend mock;
  mock.set_status_script({400});
  auto cfg = fast_config(mock);
  cfg.retries = 0;
  InferenceClient client(cfg);
  auto results = client.complete_batch({{.prompt = "x"}}, 1);
  REQUIRE(results.size() == 1);
  CHECK(results[0].finish_reason == FinishReason::error);
  CHECK(results[0].text.empty());
}

TEST_CASE("embed preserves order and dimension") {
  MockBackend mock;
  InferenceClient client(fast_config(mock));
  auto vecs = client.embed({"alpha", "beta", "gamma"});
  REQUIRE(vecs.size() == 3);
  CHECK(vecs[0].size() == vecs[1].size());
  CHECK(vecs[0] == MockBackend::embed("alpha"));
  CHECK(vecs[2] == MockBackend::embed("gamma"));

  SUBCASE("identical call gives identical vectors") {
    auto again = client.embed({"alpha", "beta", "gamma"});
    CHECK(again == vecs);
  }
}

TEST_CASE("embed of empty list errors") {
  MockBackend mock;
  InferenceClient client(fast_config(mock));
  CHECK_THROWS_WITH_AS(client.embed({}), "no texts", ClientError);
}
