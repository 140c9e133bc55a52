#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdft {

struct TensorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Dtype { f32, f16, bf16 };

std::string to_string(Dtype d);
size_t element_size(Dtype d);

struct TensorEntry {
  std::string name;
  Dtype dtype = Dtype::f32;
  std::vector<size_t> shape;
  std::vector<uint8_t> data;  // little-endian, row-major

  size_t numel() const;
  /// Element widened to f32 then returned as double.
  double element(size_t i) const;
};

struct TensorFile {
  std::map<std::string, TensorEntry> entries;  // sorted by name
  size_t header_bytes = 0;
};

/// Single-file tensor format: 8-byte LE header length, JSON header mapping
/// names to {dtype, shape, data_offsets}, then the raw buffer. Offsets are
/// validated; overlapping or out-of-bounds ranges are rejected by name.
TensorFile parse_tensor_file(const std::vector<uint8_t>& bytes);
TensorFile parse_tensor_file_at(const std::string& path);

/// Global L2 (Frobenius) distance over all tensors; 64-bit accumulation,
/// summation order fixed by tensor-name sort. Parallelized over tensors;
/// parameter_shift_serial is the reference path kept for testing.
double parameter_shift(const TensorFile& seed, const TensorFile& tuned);
double parameter_shift_serial(const TensorFile& seed, const TensorFile& tuned);

size_t total_elements(const TensorFile& file);

/// One low-rank adapter: delta = scale * B * A with A (r x k), B (d x r).
struct AdapterPair {
  TensorEntry a;
  TensorEntry b;
  double scale = 1.0;  // alpha / r
};

/// Global L2 norm over the materialized deltas of all pairs. Equals
/// parameter_shift against an all-zero seed.
double adapter_shift(const std::vector<AdapterPair>& adapters);
double adapter_shift_serial(const std::vector<AdapterPair>& adapters);

/// Pairs adapter tensors by shared prefix: <prefix><suffix_a> with
/// <prefix><suffix_b>. Unmatched factor tensors are an error.
std::vector<AdapterPair> pair_adapters(const TensorFile& file, const std::string& suffix_a,
                                       const std::string& suffix_b, double scale);

/// Writes the single-file format (test fixtures and tooling only).
std::vector<uint8_t> write_tensor_file(const std::vector<TensorEntry>& entries);

}  // namespace sdft
