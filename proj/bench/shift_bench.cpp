// Compares the OpenMP kernels against their serial reference paths:
// parameter-shift L2 over synthetic checkpoints and corpus ROUGE-L.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <random>

#include "sdft/shift_metrics.hpp"
#include "sdft/tensor_io.hpp"

using namespace sdft;

namespace {

TensorEntry random_tensor(const std::string& name, size_t rows, size_t cols, uint64_t seed) {
  TensorEntry e;
  e.name = name;
  e.dtype = Dtype::f32;
  e.shape = {rows, cols};
  e.data.resize(rows * cols * 4);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (size_t i = 0; i < rows * cols; ++i) {
    float v = dist(rng);
    std::memcpy(e.data.data() + i * 4, &v, 4);
  }
  return e;
}

template <typename F>
double time_ms(F&& fn) {
  auto start = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

int main() {
  const size_t n_tensors = 32;
  const size_t rows = 512, cols = 512;
  TensorFile seed, tuned;
  for (size_t i = 0; i < n_tensors; ++i) {
    std::string name = "layer." + std::to_string(i) + ".weight";
    seed.entries[name] = random_tensor(name, rows, cols, i);
    tuned.entries[name] = random_tensor(name, rows, cols, i + 1000);
  }

  double serial_val = 0, parallel_val = 0;
  double t_serial = time_ms([&] { serial_val = parameter_shift_serial(seed, tuned); });
  double t_parallel = time_ms([&] { parallel_val = parameter_shift(seed, tuned); });
  std::printf("parameter_shift %zu tensors of %zux%zu\n", n_tensors, rows, cols);
  std::printf("  serial   %8.2f ms  l2=%.6f\n", t_serial, serial_val);
  std::printf("  parallel %8.2f ms  l2=%.6f  speedup=%.2fx\n", t_parallel, parallel_val,
              t_serial / t_parallel);

  const size_t n_pairs = 2000, len = 200;
  std::mt19937_64 rng(7);
  std::vector<TokenizedText> cands(n_pairs), refs(n_pairs);
  const char* vocab[] = {"alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta"};
  for (size_t i = 0; i < n_pairs; ++i) {
    for (size_t j = 0; j < len; ++j) {
      cands[i].push_back(vocab[rng() % 8]);
      refs[i].push_back(vocab[rng() % 8]);
    }
  }
  double rl_serial = 0, rl_parallel = 0;
  double t_rl_serial = time_ms([&] { rl_serial = rouge_l_corpus_serial(cands, refs); });
  double t_rl_parallel = time_ms([&] { rl_parallel = rouge_l_corpus(cands, refs); });
  std::printf("rouge_l_corpus %zu pairs of %zu tokens\n", n_pairs, len);
  std::printf("  serial   %8.2f ms  rouge_l=%.6f\n", t_rl_serial, rl_serial);
  std::printf("  parallel %8.2f ms  rouge_l=%.6f  speedup=%.2fx\n", t_rl_parallel, rl_parallel,
              t_rl_serial / t_rl_parallel);

  if (serial_val != parallel_val || rl_serial != rl_parallel) {
    std::printf("MISMATCH between serial and parallel results\n");
    return 1;
  }
  return 0;
}
