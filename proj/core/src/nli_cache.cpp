#include "dpwdm/nli_cache.hpp"

#include <unistd.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

namespace dpwdm {

namespace {

constexpr char kMagic[8] = {'N', 'L', 'I', 'T', 'E', 'N', 'S', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}
void put_i32(std::string& out, std::int32_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
}
void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u64(out, bits);
}

class Reader {
 public:
  Reader(const std::string& data, const std::string& path)
      : data_(data), path_(path) {}
  void read(void* dst, std::size_t len) {
    if (pos_ + len > data_.size())
      throw Error("cache_load: truncated file " + path_);
    std::memcpy(dst, data_.data() + pos_, len);
    pos_ += len;
  }
  std::uint32_t u32() {
    std::uint8_t b[4];
    read(b, 4);
    return b[0] | (b[1] << 8) | (b[2] << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::uint64_t u64() {
    std::uint64_t v = u32();
    return v | (static_cast<std::uint64_t>(u32()) << 32);
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  const std::string& data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void cache_store(const NliTensor& tensor, const std::string& path) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  out.append(reinterpret_cast<const char*>(tensor.provenance_key.data()),
             tensor.provenance_key.size());
  out.push_back(static_cast<char>(tensor.kind));
  put_i32(out, tensor.channel);
  put_i32(out, tensor.settings.n_max);
  put_u64(out, tensor.entry_count());
  tensor.for_each([&](int n, int k, int kprime, cplx v) {
    put_i32(out, n);
    put_i32(out, k);
    put_i32(out, kprime);
    put_f64(out, v.real());
    put_f64(out, v.imag());
  });

  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cache_store: cannot open " + tmp.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw Error("cache_store: write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cache_store: rename failed for " + path + ": " + ec.message());
  }
}

NliTensor cache_load_any(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cache_load: cannot open " + path);
  std::string data((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  Reader r(data, path);

  char magic[8];
  r.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw Error("cache_load: bad magic in " + path);
  std::uint32_t version = r.u32();
  if (version != kVersion)
    throw Error("cache_load: unsupported version " + std::to_string(version) +
                " in " + path);

  NliTensor t;
  r.read(t.provenance_key.data(), t.provenance_key.size());
  std::uint8_t kind;
  r.read(&kind, 1);
  if (kind > 4) throw Error("cache_load: bad tensor kind in " + path);
  t.kind = static_cast<TensorKind>(kind);
  t.channel = r.i32();
  t.settings.n_max = r.i32();
  std::uint64_t count = r.u64();

  // Collect records grouped by row, then build contiguous rows.
  std::map<std::pair<int, int>, std::map<int, cplx>> grouped;
  for (std::uint64_t i = 0; i < count; ++i) {
    int n = r.i32();
    int k = r.i32();
    int kprime = r.i32();
    double re = r.f64(), im = r.f64();
    grouped[{n, kprime - k}][k] = cplx{re, im};
  }
  if (!r.at_end()) throw Error("cache_load: trailing bytes in " + path);

  for (auto& [key, entries] : grouped) {
    NliTensor::Row row;
    row.k_start = entries.begin()->first;
    int k_end = entries.rbegin()->first;
    row.values.assign(static_cast<std::size_t>(k_end - row.k_start + 1),
                      cplx{0.0, 0.0});
    for (auto& [k, v] : entries)
      row.values[static_cast<std::size_t>(k - row.k_start)] = v;
    t.rows.emplace(key, std::move(row));
  }
  return t;
}

NliTensor cache_load(const std::string& path,
                     const std::array<std::uint8_t, 32>& expected_key) {
  NliTensor t = cache_load_any(path);
  if (t.provenance_key != expected_key)
    throw Error("cache_load: provenance key mismatch for " + path +
                " (the cache was built with a different configuration)");
  return t;
}

void dump_csv(const NliTensor& tensor, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("dump_csv: cannot open " + path);
  f << "n,k,kprime,re,im\n";
  f.precision(17);
  tensor.for_each([&](int n, int k, int kprime, cplx v) {
    f << n << ',' << k << ',' << kprime << ',' << v.real() << ',' << v.imag()
      << '\n';
  });
  if (!f) throw Error("dump_csv: write failed for " + path);
}

}  // namespace dpwdm
