#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdft/inference_client.hpp"

namespace sdft {

struct MetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using TokenizedText = std::vector<std::string>;

struct ShiftReport {
  double bleu4 = 0.0;
  double rouge_l = 0.0;
  double mean_embedding_similarity = 0.0;
  std::vector<std::pair<double, size_t>> similarity_histogram;  // (bin lower edge, count)
  size_t n_pairs = 0;

  std::string to_json() const;
  std::string to_csv() const;
};

/// Lowercase, split on whitespace, strip leading/trailing punctuation per
/// token, drop empties. Metric values depend on this convention.
TokenizedText tokenize(const std::string& text);

/// Corpus-level BLEU-4: clipped modified n-gram precisions pooled over the
/// corpus, geometric mean with uniform weights, brevity penalty exp(1 - r/c)
/// when c < r. Any pooled precision of zero gives score zero (no smoothing).
double bleu4(const std::vector<TokenizedText>& candidates,
             const std::vector<TokenizedText>& references);

size_t lcs_length(const TokenizedText& a, const TokenizedText& b);

/// Per-pair ROUGE-L F1 (beta = 1).
double rouge_l(const TokenizedText& candidate, const TokenizedText& reference);

/// Mean per-pair ROUGE-L F1 over a corpus. Parallelized; a serial path is
/// kept for testing (see rouge_l_corpus_serial).
double rouge_l_corpus(const std::vector<TokenizedText>& candidates,
                      const std::vector<TokenizedText>& references);
double rouge_l_corpus_serial(const std::vector<TokenizedText>& candidates,
                             const std::vector<TokenizedText>& references);

double cosine_similarity(const std::vector<double>& u, const std::vector<double>& v);

struct OutputPair {
  std::string id;
  std::string tuned_output;
  std::string seed_output;
};

/// Parses the pairs file: JSONL with {id, tuned_output, seed_output}.
std::vector<OutputPair> parse_pairs_jsonl(const std::string& bytes);

/// Full shift report over (tuned, seed) output pairs; seed outputs are the
/// references. Embeddings come from the client; histogram has 20 uniform
/// bins on [-1, 1].
ShiftReport shift_report(const std::vector<OutputPair>& pairs, const InferenceClient& client);

}  // namespace sdft
