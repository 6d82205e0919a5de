#include "beamtrack/cli/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace beamtrack::cli {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'B', 'E', 'A', 'M', 'T', 'R', 'K', '1'};

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  std::uint8_t buf[8];
  std::memcpy(buf, &v, 8);
  out.insert(out.end(), buf, buf + 8);
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  const std::uint8_t* take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw CheckpointError("checkpoint: truncated file");
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    std::memcpy(&v, take(8), 8);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size, std::uint64_t state) {
  for (std::size_t i = 0; i < size; ++i) {
    state ^= data[i];
    state *= 0x100000001b3ULL;
  }
  return state;
}

std::vector<std::uint8_t> serialize_params(const math::ParamRefs& params) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  put_u64(out, params.size());
  std::uint64_t checksum = 0xcbf29ce484222325ULL;
  for (const math::ParamArray* p : params) {
    put_u64(out, p->name.size());
    out.insert(out.end(), p->name.begin(), p->name.end());
    put_u64(out, p->shape.size());
    for (std::size_t d : p->shape) put_u64(out, d);
    const auto* raw = reinterpret_cast<const std::uint8_t*>(p->values.data());
    const std::size_t n = p->values.size() * sizeof(double);
    out.insert(out.end(), raw, raw + n);
    checksum = fnv1a64(raw, n, checksum);
  }
  put_u64(out, checksum);
  return out;
}

void deserialize_params(const std::vector<std::uint8_t>& bytes, const math::ParamRefs& params) {
  Reader in(bytes);
  if (std::memcmp(in.take(8), kMagic, 8) != 0) throw CheckpointError("checkpoint: bad magic");
  const std::uint64_t count = in.u64();
  if (count != params.size())
    throw CheckpointError("checkpoint: " + std::to_string(count) + " entries, model has " +
                          std::to_string(params.size()));
  // Parse into scratch first so a failed load leaves the model untouched.
  std::vector<std::vector<double>> values(params.size());
  std::uint64_t checksum = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const math::ParamArray& p = *params[i];
    const std::uint64_t name_len = in.u64();
    if (name_len > 4096) throw CheckpointError("checkpoint: implausible name length");
    const auto* name_bytes = reinterpret_cast<const char*>(in.take(name_len));
    const std::string name(name_bytes, name_len);
    if (name != p.name)
      throw CheckpointError("checkpoint: entry " + std::to_string(i) + " is '" + name +
                            "', expected '" + p.name + "'");
    const std::uint64_t rank = in.u64();
    if (rank != p.shape.size())
      throw CheckpointError("checkpoint: rank mismatch for '" + name + "'");
    for (std::size_t d = 0; d < rank; ++d)
      if (in.u64() != p.shape[d])
        throw CheckpointError("checkpoint: shape mismatch for '" + name + "'");
    const std::size_t n = p.values.size() * sizeof(double);
    const std::uint8_t* raw = in.take(n);
    values[i].resize(p.values.size());
    std::memcpy(values[i].data(), raw, n);
    checksum = fnv1a64(raw, n, checksum);
  }
  if (in.u64() != checksum) throw CheckpointError("checkpoint: checksum mismatch");
  if (!in.done()) throw CheckpointError("checkpoint: trailing bytes");
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->values = std::move(values[i]);
}

void save_checkpoint(const std::string& path, agents::PolicySet& nets) {
  const std::vector<std::uint8_t> bytes = serialize_params(nets.all_params());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("checkpoint: cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("checkpoint: write failed for '" + path + "'");
}

void load_checkpoint(const std::string& path, agents::PolicySet& nets) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open '" + path + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  deserialize_params(bytes, nets.all_params());
}

}  // namespace beamtrack::cli
