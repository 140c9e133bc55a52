#include "sdft/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace sdft {

using json = nlohmann::json;

std::string to_string(Dtype d) {
  switch (d) {
    case Dtype::f32: return "F32";
    case Dtype::f16: return "F16";
    case Dtype::bf16: return "BF16";
  }
  return "F32";
}

size_t element_size(Dtype d) { return d == Dtype::f32 ? 4 : 2; }

size_t TensorEntry::numel() const {
  size_t n = 1;
  for (size_t s : shape) n *= s;
  return n;
}

namespace {

float f16_to_f32(uint16_t h) {
  uint32_t sign = (h & 0x8000u) << 16;
  uint32_t exp = (h >> 10) & 0x1f;
  uint32_t mant = h & 0x3ff;
  uint32_t bits;
  if (exp == 0) {
    if (mant == 0) {
      bits = sign;
    } else {
      // subnormal: renormalize
      int shift = 0;
      while ((mant & 0x400) == 0) {
        mant <<= 1;
        ++shift;
      }
      mant &= 0x3ff;
      bits = sign | ((127 - 15 - shift + 1) << 23) | (mant << 13);
    }
  } else if (exp == 31) {
    bits = sign | 0x7f800000u | (mant << 13);
  } else {
    bits = sign | ((exp - 15 + 127) << 23) | (mant << 13);
  }
  return std::bit_cast<float>(bits);
}

float bf16_to_f32(uint16_t h) { return std::bit_cast<float>(static_cast<uint32_t>(h) << 16); }

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

double TensorEntry::element(size_t i) const {
  if (dtype == Dtype::f32) {
    uint32_t v;
    std::memcpy(&v, data.data() + i * 4, 4);
    return std::bit_cast<float>(v);
  }
  uint16_t v;
  std::memcpy(&v, data.data() + i * 2, 2);
  return dtype == Dtype::f16 ? f16_to_f32(v) : bf16_to_f32(v);
}

TensorFile parse_tensor_file(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 8) throw TensorError("truncated file: shorter than header length field");
  uint64_t header_len = 0;
  for (int i = 7; i >= 0; --i) header_len = (header_len << 8) | bytes[i];
  if (8 + header_len > bytes.size()) throw TensorError("truncated file: header exceeds file size");

  json header;
  try {
    header = json::parse(bytes.begin() + 8, bytes.begin() + 8 + header_len);
  } catch (const json::exception& e) {
    throw TensorError(std::string("malformed header JSON: ") + e.what());
  }
  if (!header.is_object()) throw TensorError("malformed header JSON: not an object");

  const size_t data_base = 8 + header_len;
  const size_t data_size = bytes.size() - data_base;

  TensorFile file;
  file.header_bytes = header_len;
  std::vector<std::tuple<size_t, size_t, std::string>> ranges;  // (begin, end, name)
  for (const auto& [name, info] : header.items()) {
    if (name == "__metadata__") continue;
    if (!info.is_object() || !info.contains("dtype") || !info.contains("shape") ||
        !info.contains("data_offsets"))
      throw TensorError("malformed tensor entry: " + name);

    TensorEntry entry;
    entry.name = name;
    std::string dtype = lower(info["dtype"].get<std::string>());
    if (dtype == "f32")
      entry.dtype = Dtype::f32;
    else if (dtype == "f16")
      entry.dtype = Dtype::f16;
    else if (dtype == "bf16")
      entry.dtype = Dtype::bf16;
    else
      throw TensorError("unsupported dtype: " + name + " (" + info["dtype"].get<std::string>() + ")");

    entry.shape = info["shape"].get<std::vector<size_t>>();
    auto offsets = info["data_offsets"].get<std::vector<uint64_t>>();
    if (offsets.size() != 2 || offsets[1] < offsets[0])
      throw TensorError("invalid data_offsets: " + name);
    if (offsets[1] > data_size) throw TensorError("out of bounds: " + name);
    size_t len = offsets[1] - offsets[0];
    if (len != element_size(entry.dtype) * entry.numel())
      throw TensorError("size mismatch: " + name);

    ranges.emplace_back(offsets[0], offsets[1], name);
    entry.data.assign(bytes.begin() + data_base + offsets[0], bytes.begin() + data_base + offsets[1]);
    if (!file.entries.emplace(name, std::move(entry)).second)
      throw TensorError("duplicate tensor name: " + name);
  }

  std::sort(ranges.begin(), ranges.end());
  for (size_t i = 1; i < ranges.size(); ++i)
    if (std::get<0>(ranges[i]) < std::get<1>(ranges[i - 1]))
      throw TensorError("overlapping data ranges: " + std::get<2>(ranges[i]));
  return file;
}

TensorFile parse_tensor_file_at(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TensorError("cannot open: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return parse_tensor_file(bytes);
}

namespace {

void check_compatible(const TensorFile& seed, const TensorFile& tuned) {
  for (const auto& [name, entry] : seed.entries) {
    auto it = tuned.entries.find(name);
    if (it == tuned.entries.end()) throw TensorError("tensor missing in tuned file: " + name);
    if (it->second.shape != entry.shape) throw TensorError("shape mismatch: " + name);
  }
  for (const auto& [name, _] : tuned.entries)
    if (!seed.entries.count(name)) throw TensorError("tensor missing in seed file: " + name);
}

double tensor_sq_diff(const TensorEntry& a, const TensorEntry& b) {
  double acc = 0.0;
  size_t n = a.numel();
  for (size_t i = 0; i < n; ++i) {
    double d = a.element(i) - b.element(i);
    acc += d * d;
  }
  return acc;
}

}  // namespace

double parameter_shift_serial(const TensorFile& seed, const TensorFile& tuned) {
  check_compatible(seed, tuned);
  double acc = 0.0;
  for (const auto& [name, entry] : seed.entries) acc += tensor_sq_diff(entry, tuned.entries.at(name));
  return std::sqrt(acc);
}

double parameter_shift(const TensorFile& seed, const TensorFile& tuned) {
  check_compatible(seed, tuned);
  std::vector<const TensorEntry*> seed_ptrs, tuned_ptrs;
  for (const auto& [name, entry] : seed.entries) {  // map iteration is name-sorted
    seed_ptrs.push_back(&entry);
    tuned_ptrs.push_back(&tuned.entries.at(name));
  }
  const int64_t n = static_cast<int64_t>(seed_ptrs.size());
  std::vector<double> partial(n, 0.0);
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < n; ++i) partial[i] = tensor_sq_diff(*seed_ptrs[i], *tuned_ptrs[i]);
  // Name-order summation: result independent of the OpenMP schedule.
  double acc = 0.0;
  for (double p : partial) acc += p;
  return std::sqrt(acc);
}

size_t total_elements(const TensorFile& file) {
  size_t n = 0;
  for (const auto& [_, entry] : file.entries) n += entry.numel();
  return n;
}

namespace {

void check_adapter(const AdapterPair& pair) {
  if (pair.a.shape.size() != 2 || pair.b.shape.size() != 2)
    throw TensorError("adapter factors must be 2-D: " + pair.a.name);
  if (pair.b.shape[1] != pair.a.shape[0])
    throw TensorError("adapter inner dimension mismatch: " + pair.a.name);
}

// ||scale * B * A||_F^2 without keeping the full delta.
double adapter_sq_norm(const AdapterPair& pair, bool parallel) {
  const size_t r = pair.a.shape[0], k = pair.a.shape[1], d = pair.b.shape[0];
  std::vector<double> a_vals(r * k), b_vals(d * r);
  for (size_t i = 0; i < r * k; ++i) a_vals[i] = pair.a.element(i);
  for (size_t i = 0; i < d * r; ++i) b_vals[i] = pair.b.element(i);

  const int64_t rows = static_cast<int64_t>(d);
  std::vector<double> row_sq(rows, 0.0);
#pragma omp parallel for schedule(static) if (parallel)
  for (int64_t i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (size_t j = 0; j < k; ++j) {
      double v = 0.0;
      for (size_t t = 0; t < r; ++t) v += b_vals[i * r + t] * a_vals[t * k + j];
      v *= pair.scale;
      acc += v * v;
    }
    row_sq[i] = acc;
  }
  double acc = 0.0;
  for (double v : row_sq) acc += v;
  return acc;
}

}  // namespace

double adapter_shift(const std::vector<AdapterPair>& adapters) {
  double acc = 0.0;
  for (const auto& pair : adapters) {
    check_adapter(pair);
    acc += adapter_sq_norm(pair, true);
  }
  return std::sqrt(acc);
}

double adapter_shift_serial(const std::vector<AdapterPair>& adapters) {
  double acc = 0.0;
  for (const auto& pair : adapters) {
    check_adapter(pair);
    acc += adapter_sq_norm(pair, false);
  }
  return std::sqrt(acc);
}

std::vector<AdapterPair> pair_adapters(const TensorFile& file, const std::string& suffix_a,
                                       const std::string& suffix_b, double scale) {
  auto ends_with = [](const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  std::vector<AdapterPair> pairs;
  for (const auto& [name, entry] : file.entries) {
    if (!ends_with(name, suffix_a)) continue;
    std::string prefix = name.substr(0, name.size() - suffix_a.size());
    auto it = file.entries.find(prefix + suffix_b);
    if (it == file.entries.end()) throw TensorError("unpaired adapter factor: " + name);
    pairs.push_back({entry, it->second, scale});
  }
  for (const auto& [name, _] : file.entries)
    if (ends_with(name, suffix_b)) {
      std::string prefix = name.substr(0, name.size() - suffix_b.size());
      if (!file.entries.count(prefix + suffix_a))
        throw TensorError("unpaired adapter factor: " + name);
    }
  return pairs;
}

std::vector<uint8_t> write_tensor_file(const std::vector<TensorEntry>& entries) {
  json header = json::object();
  size_t offset = 0;
  for (const auto& e : entries) {
    size_t len = e.data.size();
    header[e.name] = {{"dtype", to_string(e.dtype)},
                      {"shape", e.shape},
                      {"data_offsets", {offset, offset + len}}};
    offset += len;
  }
  std::string hdr = header.dump();
  std::vector<uint8_t> out;
  out.reserve(8 + hdr.size() + offset);
  uint64_t n = hdr.size();
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>((n >> (8 * i)) & 0xff));
  out.insert(out.end(), hdr.begin(), hdr.end());
  for (const auto& e : entries) out.insert(out.end(), e.data.begin(), e.data.end());
  return out;
}

}  // namespace sdft
