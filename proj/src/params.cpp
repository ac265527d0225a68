#include "calico/params.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace calico {

uint64_t Rng::next_u64() {
  // splitmix64; full-period, trivially portable
  uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  while (u1 == 0.0) u1 = uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

int64_t Rng::uniform_int(int64_t lo, int64_t hi) {
  if (hi < lo) throw Error("uniform_int: empty range");
  uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  return lo + static_cast<int64_t>(next_u64() % span);
}

Tensor& ParamSet::add(const std::string& name, Tensor tensor, bool trainable) {
  if (index_.count(name)) throw ConfigError(msg("duplicate parameter name: ", name));
  tensor.set_requires_grad(true);
  index_[name] = items_.size();
  items_.push_back(Parameter{name, std::move(tensor), trainable});
  return items_.back().tensor;
}

Tensor& ParamSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError(msg("unknown parameter: ", name));
  return items_[it->second].tensor;
}

const Tensor& ParamSet::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError(msg("unknown parameter: ", name));
  return items_[it->second].tensor;
}

Parameter& ParamSet::param(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError(msg("unknown parameter: ", name));
  return items_[it->second];
}

bool ParamSet::contains(const std::string& name) const { return index_.count(name) > 0; }

void ParamSet::zero_grad() {
  for (Parameter& p : items_) p.tensor.clear_grad();
}

int64_t ParamSet::total_elements(bool trainable_only) const {
  int64_t n = 0;
  for (const Parameter& p : items_) {
    if (!trainable_only || p.trainable) n += p.tensor.numel();
  }
  return n;
}

ParamSet ParamSet::shallow_clone() const {
  ParamSet out;
  for (const Parameter& p : items_) {
    out.index_[p.name] = out.items_.size();
    out.items_.push_back(Parameter{p.name, p.tensor.shallow_clone(), p.trainable});
  }
  return out;
}

namespace {

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<char*>(b), 4);
}

void put_u64(std::ostream& os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<char*>(b), 8);
}

void put_f64(std::ostream& os, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(os, bits);
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw CheckpointError("truncated checkpoint");
  uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw CheckpointError("truncated checkpoint");
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double get_f64(std::istream& is) {
  uint64_t bits = get_u64(is);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

constexpr char kMagic[4] = {'C', 'A', 'L', 'I'};
constexpr uint32_t kVersion = 1;

}  // namespace

void ParamSet::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(msg("cannot open for write: ", path));
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  for (const Parameter& p : items_) {
    put_u32(os, static_cast<uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_u32(os, static_cast<uint32_t>(p.tensor.rank()));
    for (int64_t d : p.tensor.shape()) put_u64(os, static_cast<uint64_t>(d));
    for (double v : p.tensor.data()) put_f64(os, v);
  }
  if (!os) throw IoError(msg("write failed: ", path));
}

void ParamSet::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(msg("cannot open checkpoint: ", path));
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw CheckpointError(msg("bad checkpoint magic in ", path));
  }
  uint32_t version = get_u32(is);
  if (version != kVersion) {
    throw CheckpointError(msg("unsupported checkpoint version ", version));
  }
  size_t loaded = 0;
  while (true) {
    is.peek();
    if (is.eof()) break;
    uint32_t name_len = get_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw CheckpointError("truncated checkpoint name");
    uint32_t rank = get_u32(is);
    Shape shape(rank);
    for (uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<int64_t>(get_u64(is));
    int64_t n = shape_numel(shape);
    std::vector<double> values(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) values[static_cast<size_t>(i)] = get_f64(is);
    Tensor& dst = at(name);
    if (dst.shape() != shape) {
      throw CheckpointError(msg("shape mismatch for ", name, ": checkpoint ",
                                shape_str(shape), " vs model ", shape_str(dst.shape())));
    }
    check_finite(values, "checkpoint");
    dst.mutable_data() = std::move(values);
    ++loaded;
  }
  if (loaded != items_.size()) {
    throw CheckpointError(msg("checkpoint holds ", loaded, " parameters, model has ",
                              items_.size()));
  }
}

Tensor glorot(Rng& rng, int64_t fan_in, int64_t fan_out) {
  double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
  Tensor t = Tensor::zeros({fan_in, fan_out});
  for (double& v : t.mutable_data()) v = rng.normal() * std_dev;
  return t;
}

Tensor normal_init(Rng& rng, Shape shape, double std_dev) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.mutable_data()) v = rng.normal() * std_dev;
  return t;
}

}  // namespace calico
