#include "wdcgan/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "wdcgan/error.hpp"

namespace wdcgan::nn {

namespace {

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out.insert(out.end(), p, p + n);
  }
  void u8(std::uint8_t v) { out.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& data) : data_(data) {}

  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw Error(ErrorKind::parse, "checkpoint is truncated");
  }
  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  const std::vector<std::uint8_t>& data_;
  std::size_t pos_ = 0;
};

constexpr std::size_t kMagicLen = sizeof(kCheckpointMagic) - 1;

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Network& net, const std::string& kind) {
  Writer w;
  w.bytes(kCheckpointMagic, kMagicLen);
  w.u32(static_cast<std::uint32_t>(kind.size()));
  w.bytes(kind.data(), kind.size());
  const auto& layers = net.spec().layers;
  w.u32(static_cast<std::uint32_t>(layers.size()));
  for (const auto& l : layers) {
    w.u8(static_cast<std::uint8_t>(l.kind));
    for (std::size_t v : {l.in_channels, l.out_channels, l.kernel, l.stride, l.padding, l.channels}) w.u64(v);
    for (double v : {l.eps, l.momentum, l.slope, l.p}) w.f64(v);
    w.u8(l.affine ? 1 : 0);
  }
  std::uint64_t count = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    for (const auto& t : net.params().layer_params(i)) count += t.numel();
    for (const auto& b : net.params().layer_buffers(i)) count += b.size();
  }
  w.u64(count);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    for (const auto& t : net.params().layer_params(i))
      for (double v : t.values()) w.f64(v);
    for (const auto& b : net.params().layer_buffers(i))
      for (double v : b) w.f64(v);
  }
  return std::move(w.out);
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.str(kMagicLen) != std::string(kCheckpointMagic, kMagicLen))
    throw Error(ErrorKind::parse, "not a checkpoint (bad magic)");
  Checkpoint ck;
  ck.kind = r.str(r.u32());
  NetworkSpec spec;
  const std::uint32_t n_layers = r.u32();
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    LayerSpec l;
    const std::uint8_t kind = r.u8();
    if (kind > static_cast<std::uint8_t>(LayerKind::dropout))
      throw Error(ErrorKind::parse, "checkpoint layer " + std::to_string(i) + " has unknown kind");
    l.kind = static_cast<LayerKind>(kind);
    l.in_channels = r.u64();
    l.out_channels = r.u64();
    l.kernel = r.u64();
    l.stride = r.u64();
    l.padding = r.u64();
    l.channels = r.u64();
    l.eps = r.f64();
    l.momentum = r.f64();
    l.slope = r.f64();
    l.p = r.f64();
    l.affine = r.u8() != 0;
    spec.layers.push_back(l);
  }
  ParamStore params(spec);
  std::uint64_t expected = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    for (const auto& t : params.layer_params(i)) expected += t.numel();
    for (const auto& b : params.layer_buffers(i)) expected += b.size();
  }
  if (r.u64() != expected) throw Error(ErrorKind::parse, "checkpoint value count does not match its layers");
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    for (auto& t : params.layer_params(i))
      for (double& v : t.mutable_values()) v = r.f64();
    for (auto& b : params.layer_buffers(i))
      for (double& v : b) v = r.f64();
  }
  if (!r.done()) throw Error(ErrorKind::parse, "trailing bytes after checkpoint payload");
  ck.network = Network(std::move(spec), std::move(params));
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Network& net, const std::string& kind) {
  const auto bytes = encode_checkpoint(net, kind);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::io, "failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace wdcgan::nn
