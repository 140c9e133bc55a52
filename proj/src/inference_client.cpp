#include "sdft/inference_client.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace sdft {

using json = nlohmann::json;

InferenceClient::InferenceClient(BackendConfig config) : config_(std::move(config)) {
  if (config_.embed_url.empty()) config_.embed_url = config_.base_url;
}

namespace {

bool is_retryable_status(int status) { return status >= 500 && status < 600; }

}  // namespace

std::string InferenceClient::post_json(const std::string& url, const std::string& path,
                                       const std::string& body) const {
  if (url.empty()) throw ClientError("backend base URL not configured");

  httplib::Headers headers;
  if (!config_.token_env.empty()) {
    if (const char* tok = std::getenv(config_.token_env.c_str()))
      headers.emplace("Authorization", std::string("Bearer ") + tok);
  }

  int attempts = config_.retries + 1;
  int last_status = 0;
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      double delay = config_.backoff_initial_ms * std::pow(2.0, attempt - 1);
      std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<int64_t>(delay)));
    }
    httplib::Client cli(url);
    auto timeout = std::chrono::milliseconds(static_cast<int64_t>(config_.timeout_s * 1000));
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);

    auto res = cli.Post(path, headers, body, "application/json");
    if (!res) {
      last_status = 0;
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;  // timeouts and connection failures are retryable
    }
    if (res->status >= 200 && res->status < 300) return res->body;
    last_status = res->status;
    last_error = "HTTP " + std::to_string(res->status);
    if (!is_retryable_status(res->status))
      throw ClientError(path + ": " + last_error, res->status);
  }
  throw ClientError(path + ": retries exhausted, last: " + last_error, last_status);
}

GenerationResult InferenceClient::complete(const GenerationRequest& request) const {
  json req{{"model", request.model.empty() ? config_.model : request.model},
           {"prompt", request.prompt},
           {"max_tokens", request.max_tokens},
           {"temperature", request.temperature}};
  if (!request.stop.empty()) req["stop"] = request.stop;

  auto start = std::chrono::steady_clock::now();
  std::string body = post_json(config_.base_url, config_.completions_path, req.dump());
  auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);

  json resp;
  try {
    resp = json::parse(body);
  } catch (const json::exception& e) {
    throw ClientError(std::string("completion response: invalid JSON: ") + e.what());
  }
  if (!resp.contains("choices") || !resp["choices"].is_array() || resp["choices"].empty())
    throw ClientError("completion response: missing choices");

  const auto& choice = resp["choices"][0];
  GenerationResult result;
  result.text = choice.value("text", std::string{});
  std::string reason = choice.value("finish_reason", std::string{"stop"});
  result.finish_reason = reason == "length" ? FinishReason::length : FinishReason::stop;
  result.latency_ms = elapsed.count();
  return result;
}

std::vector<GenerationResult> InferenceClient::complete_batch(
    const std::vector<GenerationRequest>& requests, int parallelism) const {
  if (parallelism < 1) throw ClientError("parallelism must be >= 1");
  std::vector<GenerationResult> results(requests.size());
  if (requests.empty()) return results;

  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= requests.size()) return;
      try {
        results[i] = complete(requests[i]);
      } catch (const std::exception& e) {
        results[i] = GenerationResult{"", FinishReason::error, 0.0, e.what()};
      }
    }
  };

  size_t n_workers = std::min<size_t>(parallelism, requests.size());
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

std::vector<GenerationResult> InferenceClient::complete_batch(
    const std::vector<GenerationRequest>& requests) const {
  return complete_batch(requests, config_.parallelism);
}

std::vector<std::vector<double>> InferenceClient::embed(
    const std::vector<std::string>& texts) const {
  if (texts.empty()) throw ClientError("no texts");

  json req{{"model", config_.embed_model.empty() ? config_.model : config_.embed_model},
           {"input", texts}};
  std::string body = post_json(config_.embed_url, config_.embeddings_path, req.dump());

  json resp;
  try {
    resp = json::parse(body);
  } catch (const json::exception& e) {
    throw ClientError(std::string("embedding response: invalid JSON: ") + e.what());
  }
  if (!resp.contains("data") || !resp["data"].is_array())
    throw ClientError("embedding response: missing data");
  if (resp["data"].size() != texts.size())
    throw ClientError("embedding response: expected " + std::to_string(texts.size()) +
                      " vectors, got " + std::to_string(resp["data"].size()));

  std::vector<std::vector<double>> vectors;
  vectors.reserve(texts.size());
  for (const auto& item : resp["data"]) {
    if (!item.contains("embedding") || !item["embedding"].is_array())
      throw ClientError("embedding response: entry missing embedding");
    vectors.push_back(item["embedding"].get<std::vector<double>>());
    if (vectors.back().size() != vectors.front().size())
      throw ClientError("embedding response: dimension mismatch");
  }
  return vectors;
}

}  // namespace sdft
