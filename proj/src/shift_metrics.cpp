#include "sdft/shift_metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "json.hpp"

namespace sdft {

using ordered_json = nlohmann::ordered_json;

namespace {

bool is_space_byte(unsigned char c) { return std::isspace(c) != 0; }

bool is_punct_byte(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

}  // namespace

TokenizedText tokenize(const std::string& text) {
  TokenizedText out;
  std::string cur;
  auto flush = [&] {
    size_t b = 0, e = cur.size();
    while (b < e && is_punct_byte(static_cast<unsigned char>(cur[b]))) ++b;
    while (e > b && is_punct_byte(static_cast<unsigned char>(cur[e - 1]))) --e;
    if (e > b) out.push_back(cur.substr(b, e - b));
    cur.clear();
  };
  for (unsigned char c : text) {
    if (is_space_byte(c)) {
      flush();
    } else {
      cur += static_cast<char>(std::tolower(c));
    }
  }
  flush();
  return out;
}

double bleu4(const std::vector<TokenizedText>& candidates,
             const std::vector<TokenizedText>& references) {
  if (candidates.size() != references.size())
    throw MetricError("bleu4: candidate/reference count mismatch");
  if (candidates.empty()) throw MetricError("bleu4: empty corpus");

  auto join_ngram = [](const TokenizedText& toks, size_t start, size_t n) {
    std::string key;
    for (size_t k = 0; k < n; ++k) {
      if (k) key += '\x1f';
      key += toks[start + k];
    }
    return key;
  };

  size_t cand_len = 0, ref_len = 0;
  double log_sum = 0.0;
  for (size_t n = 1; n <= 4; ++n) {
    size_t matched = 0, total = 0;
    for (size_t i = 0; i < candidates.size(); ++i) {
      const auto& cand = candidates[i];
      const auto& ref = references[i];
      if (cand.size() < n) continue;
      std::map<std::string, size_t> cand_counts, ref_counts;
      for (size_t s = 0; s + n <= cand.size(); ++s) cand_counts[join_ngram(cand, s, n)]++;
      for (size_t s = 0; ref.size() >= n && s + n <= ref.size(); ++s)
        ref_counts[join_ngram(ref, s, n)]++;
      for (const auto& [gram, count] : cand_counts) {
        auto it = ref_counts.find(gram);
        matched += std::min(count, it == ref_counts.end() ? size_t{0} : it->second);
      }
      total += cand.size() - n + 1;
    }
    if (matched == 0 || total == 0) return 0.0;
    log_sum += 0.25 * std::log(static_cast<double>(matched) / static_cast<double>(total));
  }
  for (size_t i = 0; i < candidates.size(); ++i) {
    cand_len += candidates[i].size();
    ref_len += references[i].size();
  }
  double bp = 1.0;
  if (cand_len < ref_len) {
    if (cand_len == 0) return 0.0;
    bp = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  }
  return bp * std::exp(log_sum);
}

size_t lcs_length(const TokenizedText& a, const TokenizedText& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const TokenizedText& candidate, const TokenizedText& reference) {
  size_t lcs = lcs_length(candidate, reference);
  double p = candidate.empty() ? 0.0 : static_cast<double>(lcs) / candidate.size();
  double r = reference.empty() ? 0.0 : static_cast<double>(lcs) / reference.size();
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

double rouge_l_corpus_serial(const std::vector<TokenizedText>& candidates,
                             const std::vector<TokenizedText>& references) {
  if (candidates.size() != references.size())
    throw MetricError("rouge_l: candidate/reference count mismatch");
  if (candidates.empty()) throw MetricError("rouge_l: empty corpus");
  double sum = 0.0;
  for (size_t i = 0; i < candidates.size(); ++i) sum += rouge_l(candidates[i], references[i]);
  return sum / candidates.size();
}

double rouge_l_corpus(const std::vector<TokenizedText>& candidates,
                      const std::vector<TokenizedText>& references) {
  if (candidates.size() != references.size())
    throw MetricError("rouge_l: candidate/reference count mismatch");
  if (candidates.empty()) throw MetricError("rouge_l: empty corpus");
  const int64_t n = static_cast<int64_t>(candidates.size());
  std::vector<double> per_pair(n);
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < n; ++i) per_pair[i] = rouge_l(candidates[i], references[i]);
  // Fixed-order summation keeps the result schedule-independent.
  double sum = 0.0;
  for (double f : per_pair) sum += f;
  return sum / static_cast<double>(n);
}

double cosine_similarity(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size()) throw MetricError("cosine: dimension mismatch");
  if (u.empty()) throw MetricError("cosine: empty vectors");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw MetricError("cosine: zero vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

std::vector<OutputPair> parse_pairs_jsonl(const std::string& bytes) {
  std::vector<OutputPair> pairs;
  size_t pos = 0, line_no = 0;
  while (pos < bytes.size()) {
    size_t nl = bytes.find('\n', pos);
    std::string line = bytes.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? bytes.size() : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ordered_json obj;
    try {
      obj = ordered_json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw MetricError("pairs line " + std::to_string(line_no) + ": invalid JSON");
    }
    for (const char* key : {"tuned_output", "seed_output"})
      if (!obj.contains(key) || !obj[key].is_string())
        throw MetricError("pairs line " + std::to_string(line_no) + ": missing key: " + key);
    OutputPair p;
    p.id = obj.contains("id") && obj["id"].is_string() ? obj["id"].get<std::string>()
                                                       : std::to_string(line_no - 1);
    p.tuned_output = obj["tuned_output"].get<std::string>();
    p.seed_output = obj["seed_output"].get<std::string>();
    pairs.push_back(std::move(p));
  }
  return pairs;
}

ShiftReport shift_report(const std::vector<OutputPair>& pairs, const InferenceClient& client) {
  if (pairs.empty()) throw MetricError("shift_report: empty pair list");

  std::vector<TokenizedText> cands, refs;
  std::vector<std::string> tuned_texts, seed_texts;
  cands.reserve(pairs.size());
  refs.reserve(pairs.size());
  for (const auto& p : pairs) {
    cands.push_back(tokenize(p.tuned_output));
    refs.push_back(tokenize(p.seed_output));
    tuned_texts.push_back(p.tuned_output);
    seed_texts.push_back(p.seed_output);
  }

  ShiftReport report;
  report.n_pairs = pairs.size();
  report.bleu4 = bleu4(cands, refs);
  report.rouge_l = rouge_l_corpus(cands, refs);

  auto tuned_vecs = client.embed(tuned_texts);
  auto seed_vecs = client.embed(seed_texts);

  constexpr size_t kBins = 20;
  std::vector<size_t> counts(kBins, 0);
  double sim_sum = 0.0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    double s = cosine_similarity(tuned_vecs[i], seed_vecs[i]);
    sim_sum += s;
    auto bin = static_cast<size_t>((s + 1.0) / 2.0 * kBins);
    if (bin >= kBins) bin = kBins - 1;  // s == 1 lands in the top bin
    counts[bin] += 1;
  }
  report.mean_embedding_similarity = sim_sum / pairs.size();
  for (size_t b = 0; b < kBins; ++b)
    report.similarity_histogram.emplace_back(-1.0 + 2.0 * b / kBins, counts[b]);
  return report;
}

std::string ShiftReport::to_json() const {
  ordered_json obj;
  obj["tokenization"] = "lowercase, whitespace split, leading/trailing punctuation stripped";
  obj["bleu"] = "corpus-level BLEU-4, no smoothing";
  obj["rouge"] = "mean per-pair ROUGE-L F1 (beta=1)";
  obj["bleu4"] = bleu4;
  obj["rouge_l"] = rouge_l;
  obj["mean_embedding_similarity"] = mean_embedding_similarity;
  obj["n_pairs"] = n_pairs;
  ordered_json hist = ordered_json::array();
  for (const auto& [lower, count] : similarity_histogram)
    hist.push_back({{"bin_lower", lower}, {"count", count}});
  obj["similarity_histogram"] = hist;
  return obj.dump(2) + "\n";
}

std::string ShiftReport::to_csv() const {
  std::ostringstream os;
  os << "metric,value\n";
  os << "bleu4," << bleu4 << "\n";
  os << "rouge_l," << rouge_l << "\n";
  os << "mean_embedding_similarity," << mean_embedding_similarity << "\n";
  os << "n_pairs," << n_pairs << "\n";
  return os.str();
}

}  // namespace sdft
