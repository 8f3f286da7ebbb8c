#include "mza/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mza {

namespace {

constexpr char kMagic[8] = {'M', 'Z', 'A', 'C', 'K', 'P', 'T', '\0'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    out_.append(static_cast<const char*>(p), n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>(v >> (8 * i)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void tensors(const ParameterSet& set) {
    u32(static_cast<std::uint32_t>(set.size()));
    for (const auto& [name, t] : set) {
      str(name);
      u32(static_cast<std::uint32_t>(t.rank()));
      for (auto d : t.shape()) i64(d);
      for (double v : t.values()) f64(v);
    }
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw CheckpointError("truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in_[pos_++]))
           << (8 * i);
    }
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_++]))
           << (8 * i);
    }
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  ParameterSet tensors() {
    ParameterSet set;
    const auto count = u32();
    for (std::uint32_t k = 0; k < count; ++k) {
      std::string name = str();
      const auto rank = u32();
      if (rank > 8) throw CheckpointError("implausible tensor rank");
      std::vector<std::int64_t> shape(rank);
      std::uint64_t n = 1;
      for (auto& d : shape) {
        d = i64();
        if (d < 0) throw CheckpointError("negative tensor dimension");
        n *= static_cast<std::uint64_t>(d);
      }
      need(n * 8);
      std::vector<double> values(n);
      for (auto& v : values) v = f64();
      if (!set.emplace(std::move(name), Tensor(shape, std::move(values)))
               .second) {
        throw CheckpointError("duplicate tensor name");
      }
    }
    return set;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& c) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(Checkpoint::kVersion);
  w.u64(c.config_digest);
  w.i64(c.training_step);
  w.tensors(c.params);
  w.i64(c.optimizer.step);
  w.tensors(c.optimizer.first_moment);
  w.tensors(c.optimizer.second_moment);
  return w.take();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.raw(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic)) {
    throw CheckpointError("not a checkpoint (bad magic)");
  }
  const auto version = r.u32();
  if (version != Checkpoint::kVersion) {
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(version));
  }
  Checkpoint c;
  c.config_digest = r.u64();
  c.training_step = r.i64();
  c.params = r.tensors();
  c.optimizer.step = r.i64();
  c.optimizer.first_moment = r.tensors();
  c.optimizer.second_moment = r.tensors();
  if (!r.done()) throw CheckpointError("trailing bytes after checkpoint");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + tmp);
    const auto bytes = encode_checkpoint(c);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str());
}

}  // namespace mza
