#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "weights.hpp"

namespace specboltz {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace io {

/// Little-endian field writer / reader with bounds checking.
class Writer {
 public:
  template <class T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void bytes(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  const std::vector<char>& data() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(const char* p, std::size_t n, std::string what) : p_(p), n_(n), what_(std::move(what)) {}
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, p_ + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void need(std::size_t k) const {
    if (n_ - pos_ < k) throw FormatError(what_ + ": file is truncated");
  }
  const char* cursor() const { return p_ + pos_; }
  void skip(std::size_t k) {
    need(k);
    pos_ += k;
  }
  std::size_t remaining() const { return n_ - pos_; }

 private:
  const char* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
  std::string what_;
};

inline std::vector<char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

/// Writes through a temporary file and renames, so readers never see a partial file.
inline void write_file(const std::string& path, const std::vector<char>& data) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write '" + tmp + "'");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw FormatError("write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, target);
}

/// 64-bit FNV-1a, used as the weight-cache checksum in run metadata.
inline std::uint64_t fnv1a(const char* p, std::size_t n) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(p[i]);
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace io

/// Weight cache layout (little-endian):
///   "BWT1", u32 version = 1, u32 operator, u32 N, f64 L, f64 lambda, f64 beta,
///   u32 angular family, f64 family parameter, f64 quad_tol,
///   N^6 f64 values (zeta-index major), u64 entry count.
inline constexpr char weight_magic[4] = {'B', 'W', 'T', '1'};
inline constexpr std::uint32_t weight_format_version = 1;

inline std::vector<char> serialize_table(const WeightTable& t) {
  const std::size_t m = t.modes();
  if (t.values.size() != m * m) throw InvalidArgument("save_table: value count does not match N");
  io::Writer w;
  w.bytes(weight_magic, 4);
  w.put<std::uint32_t>(weight_format_version);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(t.meta.op));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(t.meta.n));
  w.put<double>(t.meta.half_width);
  w.put<double>(t.meta.lambda);
  w.put<double>(t.meta.beta);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(t.meta.family));
  w.put<double>(t.meta.family_parameter);
  w.put<double>(t.meta.quad_tol);
  w.bytes(reinterpret_cast<const char*>(t.values.data()), t.values.size() * sizeof(double));
  w.put<std::uint64_t>(static_cast<std::uint64_t>(t.values.size()));
  return w.data();
}

inline void save_table(const WeightTable& t, const std::string& path) { io::write_file(path, serialize_table(t)); }

inline WeightTable deserialize_table(const std::vector<char>& bytes, const std::string& what = "weight cache") {
  io::Reader r(bytes.data(), bytes.size(), what);
  r.need(4);
  if (std::memcmp(r.cursor(), weight_magic, 4) != 0) throw FormatError(what + ": bad magic (not a weight cache)");
  r.skip(4);
  const auto version = r.get<std::uint32_t>();
  if (version != weight_format_version)
    throw FormatError(what + ": unsupported version " + std::to_string(version));
  WeightTable t;
  const auto op = r.get<std::uint32_t>();
  if (op > 1) throw FormatError(what + ": unknown operator tag " + std::to_string(op));
  t.meta.op = static_cast<OperatorKind>(op);
  const auto n = r.get<std::uint32_t>();
  if (n < 4 || n % 2 != 0 || n > 64) throw FormatError(what + ": implausible N " + std::to_string(n));
  t.meta.n = static_cast<int>(n);
  t.meta.half_width = r.get<double>();
  t.meta.lambda = r.get<double>();
  t.meta.beta = r.get<double>();
  const auto fam = r.get<std::uint32_t>();
  if (fam > 2) throw FormatError(what + ": unknown angular family tag " + std::to_string(fam));
  t.meta.family = static_cast<AngularFamily>(fam);
  t.meta.family_parameter = r.get<double>();
  t.meta.quad_tol = r.get<double>();
  const std::size_t count = t.modes() * t.modes();
  if (r.remaining() != count * sizeof(double) + sizeof(std::uint64_t))
    throw FormatError(what + ": file is truncated or has trailing data (expected " + std::to_string(count) +
                      " entries)");
  t.values.resize(count);
  std::memcpy(t.values.data(), r.cursor(), count * sizeof(double));
  r.skip(count * sizeof(double));
  const auto footer = r.get<std::uint64_t>();
  if (footer != count) throw FormatError(what + ": entry-count footer mismatch");
  return t;
}

/// Loads a cache; when `expected` is given the metadata must describe the same run.
inline WeightTable load_table(const std::string& path, const std::optional<WeightTableMeta>& expected = std::nullopt) {
  auto t = deserialize_table(io::read_file(path), "weight cache '" + path + "'");
  if (expected && !t.meta.same_run(*expected)) {
    const auto& e = *expected;
    std::string diff;
    const auto note = [&](bool bad, const std::string& s) {
      if (bad) diff += (diff.empty() ? "" : ", ") + s;
    };
    note(t.meta.op != e.op, std::string("operator ") + operator_name(t.meta.op) + " vs " + operator_name(e.op));
    note(t.meta.n != e.n, "N " + std::to_string(t.meta.n) + " vs " + std::to_string(e.n));
    note(t.meta.half_width != e.half_width, "L " + std::to_string(t.meta.half_width) + " vs " + std::to_string(e.half_width));
    note(t.meta.lambda != e.lambda, "lambda " + std::to_string(t.meta.lambda) + " vs " + std::to_string(e.lambda));
    note(t.meta.beta != e.beta, "beta " + std::to_string(t.meta.beta) + " vs " + std::to_string(e.beta));
    note(t.meta.family != e.family,
         std::string("kernel family ") + family_name(t.meta.family) + " vs " + family_name(e.family));
    note(t.meta.family_parameter != e.family_parameter, "kernel parameter " + std::to_string(t.meta.family_parameter) +
                                                            " vs " + std::to_string(e.family_parameter));
    throw MetadataMismatch("weight cache '" + path + "' does not match the run: " + diff);
  }
  return t;
}

inline std::uint64_t file_checksum(const std::string& path) {
  const auto bytes = io::read_file(path);
  return io::fnv1a(bytes.data(), bytes.size());
}

}  // namespace specboltz
