#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdft {

struct ClientError : std::runtime_error {
  int http_status;  // 0 when no HTTP response was received
  ClientError(const std::string& msg, int status = 0)
      : std::runtime_error(msg), http_status(status) {}
};

struct BackendConfig {
  std::string base_url;  // e.g. http://127.0.0.1:8080
  std::string model;
  std::string embed_url;  // defaults to base_url when empty
  std::string embed_model;
  std::string completions_path = "/v1/completions";
  std::string embeddings_path = "/v1/embeddings";
  double timeout_s = 60.0;
  int retries = 3;
  int parallelism = 4;
  double backoff_initial_ms = 250.0;  // doubles per retry
  std::string token_env;  // env var holding a bearer token, optional
};

struct GenerationRequest {
  std::string prompt;
  int max_tokens = 1024;
  double temperature = 0.0;
  std::vector<std::string> stop;
  std::string model;  // empty -> config model
};

enum class FinishReason { stop, length, error };

struct GenerationResult {
  std::string text;
  FinishReason finish_reason = FinishReason::stop;
  double latency_ms = 0.0;
  std::string error;  // set when finish_reason == error
};

/// HTTP client for completion-style and embedding backends. Thread-safe;
/// complete_batch runs its own bounded worker pool.
class InferenceClient {
 public:
  explicit InferenceClient(BackendConfig config);

  /// Single completion. Retries timeouts and 5xx with exponential backoff;
  /// 4xx fails immediately. Throws ClientError when retries are exhausted.
  GenerationResult complete(const GenerationRequest& request) const;

  /// Ordered batch with at most `parallelism` requests in flight. Per-item
  /// failures become finish_reason=error entries; result i matches request i.
  std::vector<GenerationResult> complete_batch(const std::vector<GenerationRequest>& requests,
                                               int parallelism) const;
  std::vector<GenerationResult> complete_batch(
      const std::vector<GenerationRequest>& requests) const;

  /// One embedding vector per text, order preserved, uniform dimension.
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) const;

  const BackendConfig& config() const { return config_; }

 private:
  std::string post_json(const std::string& url, const std::string& path,
                        const std::string& body) const;

  BackendConfig config_;
};

}  // namespace sdft
