#include "mosgnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mosgnn/errors.hpp"

namespace mosgnn {

namespace {

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<unsigned char>& buffer() { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& buf, std::size_t end) : buf_(buf), end_(end) {}
  const unsigned char* take(std::size_t n) {
    if (n > end_ - pos_) throw CheckpointError("checkpoint truncated");
    const unsigned char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32() {
    const unsigned char* p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    const unsigned char* p = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    const unsigned char* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  [[nodiscard]] std::size_t pos() const { return pos_; }

 private:
  const std::vector<unsigned char>& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint64_t fnv1a(const unsigned char* p, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, ModelParams& params, const nlohmann::json& metadata) {
  Writer w;
  w.bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.u32(kCheckpointVersion);
  w.str(metadata.dump());
  const auto named = params.named();
  w.u32(static_cast<std::uint32_t>(named.size()));
  for (const auto& [name, t] : named) {
    w.str(name);
    w.u64(t->rows);
    w.u64(t->cols);
  }
  for (const auto& [name, t] : named) {
    for (double v : t->values) w.f64(v);
  }
  auto& buf = w.buffer();
  w.u64(fnv1a(buf.data(), buf.size()));

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof(kCheckpointMagic) + 8 ||
      std::memcmp(buf.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw CheckpointError("not a checkpoint (bad magic bytes): " + path.string());
  }
  const std::size_t body = buf.size() - 8;
  Reader r(buf, buf.size());
  r.take(sizeof(kCheckpointMagic));
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  Reader tail(buf, buf.size());
  tail.take(body);
  if (tail.u64() != fnv1a(buf.data(), body)) throw CheckpointError("checkpoint checksum mismatch: " + path.string());

  Reader rb(buf, body);
  rb.take(sizeof(kCheckpointMagic) + 4);
  Checkpoint ck;
  try {
    ck.metadata = nlohmann::json::parse(rb.str());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint metadata: ") + e.what());
  }
  const std::uint32_t count = rb.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = rb.str();
    const std::uint64_t rows = rb.u64(), cols = rb.u64();
    if (rows != 0 && cols > (body / 8) / rows) throw CheckpointError("checkpoint shape table is implausible");
    ck.tensors.emplace_back(std::move(name), Tensor(rows, cols));
  }
  for (auto& [name, t] : ck.tensors) {
    for (double& v : t.values) v = rb.f64();
  }
  if (rb.pos() != body) throw CheckpointError("checkpoint has trailing bytes");
  return ck;
}

void load_parameters(const Checkpoint& ckpt, ModelParams& params) {
  const auto named = params.named();
  if (named.size() != ckpt.tensors.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(ckpt.tensors.size()) + " tensors, model expects " +
                          std::to_string(named.size()));
  }
  for (std::size_t i = 0; i < named.size(); ++i) {
    const auto& [name, stored] = ckpt.tensors[i];
    Tensor& dst = *named[i].second;
    if (name != named[i].first || stored.rows != dst.rows || stored.cols != dst.cols) {
      throw CheckpointError("checkpoint tensor " + name + " (" + std::to_string(stored.rows) + "x" +
                            std::to_string(stored.cols) + ") does not match model tensor " + named[i].first + " (" +
                            std::to_string(dst.rows) + "x" + std::to_string(dst.cols) + ")");
    }
  }
  for (std::size_t i = 0; i < named.size(); ++i) named[i].second->values = ckpt.tensors[i].second.values;
}

}  // namespace mosgnn
