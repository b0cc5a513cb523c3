#include "training/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "common/errors.hpp"

namespace sabrec::training {

using numerics::Tensor;

namespace {

constexpr char kMagic[4] = {'S', 'A', 'B', 'R'};
constexpr uint8_t kDtypeF64 = 0;
constexpr uint8_t kDtypeF32 = 1;

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
  const std::string& buf;
  const std::string& path;
  size_t pos = 0;

  void need(size_t n) {
    if (pos + n > buf.size()) throw IoError("truncated checkpoint: " + path);
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, Checkpoint::kVersion);
  put_u64(out, checkpoint.config_json.size());
  out.append(checkpoint.config_json);
  put_u64(out, checkpoint.params.size());
  for (const auto& [name, t] : checkpoint.params.all()) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out.append(name);
    out.push_back(static_cast<char>(checkpoint.store_f32 ? kDtypeF32 : kDtypeF64));
    put_u32(out, static_cast<uint32_t>(t.rank()));
    for (int64_t e : t.shape) put_u64(out, static_cast<uint64_t>(e));
    if (checkpoint.store_f32) {
      for (double v : t.data) put_u32(out, std::bit_cast<uint32_t>(static_cast<float>(v)));
    } else {
      for (double v : t.data) put_u64(out, std::bit_cast<uint64_t>(v));
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot create checkpoint file: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("failed writing checkpoint file: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint file: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r{buf, path};

  std::string magic = r.bytes(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw ParseError("not a checkpoint (bad magic): " + path);
  }
  uint32_t version = r.u32();
  if (version != Checkpoint::kVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version) + ": " + path);
  }

  Checkpoint out;
  uint64_t config_len = r.u64();
  out.config_json = r.bytes(config_len);
  uint64_t tensor_count = r.u64();
  for (uint64_t i = 0; i < tensor_count; ++i) {
    uint32_t name_len = r.u32();
    std::string name = r.bytes(name_len);
    r.need(1);
    uint8_t dtype = static_cast<uint8_t>(buf[r.pos++]);
    if (dtype != kDtypeF64 && dtype != kDtypeF32) {
      throw ParseError("checkpoint tensor '" + name + "' has unknown dtype tag: " + path);
    }
    uint32_t rank = r.u32();
    std::vector<int64_t> shape(rank);
    for (uint32_t d = 0; d < rank; ++d) shape[d] = static_cast<int64_t>(r.u64());
    int64_t n = numerics::shape_numel(shape);
    Tensor t = Tensor::zeros(shape);
    if (dtype == kDtypeF32) {
      out.store_f32 = true;
      for (int64_t j = 0; j < n; ++j) {
        t.at(j) = static_cast<double>(std::bit_cast<float>(r.u32()));
      }
    } else {
      for (int64_t j = 0; j < n; ++j) t.at(j) = std::bit_cast<double>(r.u64());
    }
    out.params.add(name, std::move(t));
  }
  if (r.pos != buf.size()) {
    throw ParseError("checkpoint has trailing bytes: " + path);
  }
  return out;
}

}  // namespace sabrec::training
