#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stylerec/error.hpp"
#include "stylerec/types.hpp"

namespace stylerec {

// Binary feature-vector file:
//   bytes 0..3   magic "SRFV"
//   u32 LE       version (1)
//   u32 LE       dimension d
//   u64 LE       row count n
//   n rows of:   32-byte id (NUL padded) | u8 category | d x f32 LE
// Fixed-size rows allow length checking and O(1) seeking.

inline constexpr char kFeatureMagic[4] = {'S', 'R', 'F', 'V'};
inline constexpr std::uint32_t kFeatureFormatVersion = 1;
inline constexpr std::size_t kFeatureIdBytes = 32;

struct FeatureRow {
  std::string id;
  GarmentCategory category = GarmentCategory::CoatsJackets;
  std::vector<float> values;
};

namespace detail {

inline void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline float get_f32(const unsigned char* p) {
  std::uint32_t bits = get_u32(p);
  float f;
  std::memcpy(&f, &bits, sizeof(f));
  return f;
}

inline void put_f32(std::string& buf, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof(bits));
  put_u32(buf, bits);
}

}  // namespace detail

// Immutable in-memory store. Vectors are unit-normalized at load so cosine
// similarity reduces to a dot product.
class FeatureStore {
 public:
  FeatureStore() = default;
  explicit FeatureStore(std::uint32_t dimension) : dim_(dimension) {}

  std::uint32_t dimension() const { return dim_; }
  std::size_t size() const { return ids_.size(); }

  void add(const std::string& id, GarmentCategory category,
           std::span<const float> values) {
    if (values.size() != dim_)
      throw ValidationError("feature '" + id + "': dimension mismatch");
    if (index_.count(id))
      throw ValidationError("duplicate feature id '" + id + "'");
    double norm_sq = 0;
    for (float v : values) {
      if (!std::isfinite(v))
        throw ValidationError("feature '" + id + "': non-finite value");
      norm_sq += static_cast<double>(v) * v;
    }
    if (norm_sq == 0.0)
      throw ValidationError("feature '" + id + "': zero-norm vector");
    const double inv = 1.0 / std::sqrt(norm_sq);
    index_[id] = ids_.size();
    ids_.push_back(id);
    categories_.push_back(category);
    by_category_[static_cast<std::size_t>(category)].push_back(ids_.size() - 1);
    for (float v : values) data_.push_back(static_cast<float>(v * inv));
  }

  std::span<const float> vector_at(std::size_t row) const {
    return {data_.data() + row * dim_, dim_};
  }

  const std::string& id_at(std::size_t row) const { return ids_[row]; }
  GarmentCategory category_at(std::size_t row) const { return categories_[row]; }

  // Exact lookup; nullopt-like nullptr when absent.
  std::span<const float> lookup(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return {};
    return vector_at(it->second);
  }

  bool contains(std::string_view id) const {
    return index_.count(std::string(id)) > 0;
  }

  const std::vector<std::size_t>& rows_for(GarmentCategory c) const {
    return by_category_[static_cast<std::size_t>(c)];
  }

 private:
  std::uint32_t dim_ = 0;
  std::vector<float> data_;  // row-major, unit rows
  std::vector<std::string> ids_;
  std::vector<GarmentCategory> categories_;
  std::map<std::string, std::size_t> index_;
  std::array<std::vector<std::size_t>, kNumCategories> by_category_;
};

inline void save_features(const std::filesystem::path& path,
                          std::span<const FeatureRow> rows,
                          std::uint32_t dimension) {
  std::string buf;
  buf.append(kFeatureMagic, 4);
  detail::put_u32(buf, kFeatureFormatVersion);
  detail::put_u32(buf, dimension);
  detail::put_u64(buf, rows.size());
  for (const FeatureRow& r : rows) {
    if (r.id.empty() || r.id.size() > kFeatureIdBytes)
      throw ValidationError("feature id '" + r.id + "' must be 1..32 bytes");
    if (r.values.size() != dimension)
      throw ValidationError("feature '" + r.id + "': dimension mismatch");
    buf.append(r.id);
    buf.append(kFeatureIdBytes - r.id.size(), '\0');
    buf.push_back(static_cast<char>(r.category));
    for (float v : r.values) detail::put_f32(buf, v);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for write: " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("write failed: " + path.string());
}

inline FeatureStore load_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());

  if (bytes.size() < 20)
    throw TruncatedError(path.string() + ": shorter than the fixed header");
  if (std::memcmp(p, kFeatureMagic, 4) != 0)
    throw FormatError(path.string() + ": bad magic, not a feature file");
  const std::uint32_t version = detail::get_u32(p + 4);
  if (version != kFeatureFormatVersion)
    throw FormatError(path.string() + ": unsupported feature file version " +
                      std::to_string(version));
  const std::uint32_t dim = detail::get_u32(p + 8);
  const std::uint64_t count = detail::get_u64(p + 12);
  if (dim == 0 && count > 0)
    throw FormatError(path.string() + ": zero dimension with nonzero count");

  const std::uint64_t row_bytes = kFeatureIdBytes + 1 + 4ull * dim;
  const std::uint64_t expected = 20 + count * row_bytes;
  if (bytes.size() != expected)
    throw TruncatedError(path.string() + ": expected " +
                         std::to_string(expected) + " bytes, found " +
                         std::to_string(bytes.size()));

  FeatureStore store(dim);
  std::vector<float> values(dim);
  for (std::uint64_t r = 0; r < count; ++r) {
    const unsigned char* row = p + 20 + r * row_bytes;
    std::size_t id_len = 0;
    while (id_len < kFeatureIdBytes && row[id_len] != 0) ++id_len;
    std::string id(reinterpret_cast<const char*>(row), id_len);
    if (id.empty())
      throw ValidationError("row " + std::to_string(r) + ": empty feature id");
    const std::uint8_t cat = row[kFeatureIdBytes];
    if (cat >= kNumCategories)
      throw ValidationError("row " + std::to_string(r) +
                            ": invalid category byte");
    for (std::uint32_t i = 0; i < dim; ++i)
      values[i] = detail::get_f32(row + kFeatureIdBytes + 1 + 4ull * i);
    store.add(id, static_cast<GarmentCategory>(cat), values);
  }
  return store;
}

}  // namespace stylerec
