#include "calico/config.hpp"

#include <fstream>
#include <sstream>

namespace calico {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

KeyValues KeyValues::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError(msg("cannot open config: ", path));
  std::stringstream buf;
  buf << is.rdbuf();
  return from_string(buf.str());
}

KeyValues KeyValues::from_string(const std::string& text) {
  KeyValues kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ParseError(msg("config line ", lineno, " is not key=value: ", t));
    }
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ParseError(msg("config line ", lineno, " has empty key"));
    kv.entries_[key] = value;
  }
  return kv;
}

bool KeyValues::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string KeyValues::get_str(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  consumed_.insert(key);
  return it->second;
}

int64_t KeyValues::get_i64(const std::string& key, int64_t fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  consumed_.insert(key);
  try {
    size_t pos = 0;
    int64_t v = std::stoll(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ParseError(msg("config key ", key, ": expected integer, got '", it->second, "'"));
  }
}

double KeyValues::get_f64(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  consumed_.insert(key);
  try {
    size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ParseError(msg("config key ", key, ": expected number, got '", it->second, "'"));
  }
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  consumed_.insert(key);
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParseError(msg("config key ", key, ": expected boolean, got '", v, "'"));
}

std::vector<int64_t> KeyValues::get_i64_list(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return {};
  consumed_.insert(key);
  std::vector<int64_t> out;
  std::istringstream is(it->second);
  std::string part;
  while (std::getline(is, part, ',')) {
    part = trim(part);
    if (part.empty()) continue;
    try {
      out.push_back(std::stoll(part));
    } catch (const std::exception&) {
      throw ParseError(msg("config key ", key, ": expected integer list, got '",
                           it->second, "'"));
    }
  }
  return out;
}

void KeyValues::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

std::vector<std::string> KeyValues::unconsumed() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) {
    (void)v;
    if (!consumed_.count(k)) out.push_back(k);
  }
  return out;
}

void ModelConfig::validate() const {
  auto positive = [](int64_t v, const char* name) {
    if (v <= 0) throw ConfigError(msg("config: ", name, " must be positive, got ", v));
  };
  positive(N_I_max, "N_I_max");
  positive(H, "H");
  positive(W, "W");
  positive(S_C, "S_C");
  positive(D_C, "D_C");
  positive(S_S, "S_S");
  positive(D_S, "D_S");
  positive(S_I, "S_I");
  positive(D_I, "D_I");
  positive(D, "D");
  positive(S_D, "S_D");
  positive(D_D, "D_D");
  positive(vocab, "vocab");
  positive(heads, "heads");
  if (N < 2) throw ConfigError(msg("config: N must be >= 2, got ", N));
  if (S_I > S_C) throw ConfigError(msg("config: S_I (", S_I, ") must be <= S_C (", S_C, ")"));
  int64_t pixels = 3 * H * W;
  for (auto [s, name] : {std::pair<int64_t, const char*>{S_C, "S_C"},
                         {S_S, "S_S"},
                         {S_D, "S_D"}}) {
    if (pixels % s != 0) {
      throw ConfigError(msg("config: 3*H*W (", pixels, ") must be divisible by ", name,
                            " (", s, ") for the patch embedding"));
    }
  }
  if ((H * W) % S_D != 0) {
    throw ConfigError(msg("config: H*W (", H * W, ") must be divisible by S_D (", S_D,
                          ") for mask upsampling"));
  }
  for (auto [d, name] : {std::pair<int64_t, const char*>{D, "D"},
                         {D_I, "D_I"},
                         {D_C, "D_C"},
                         {D_S, "D_S"},
                         {D_D, "D_D"}}) {
    if (d % heads != 0) {
      throw ConfigError(msg("config: ", name, " (", d, ") must be divisible by heads (",
                            heads, ")"));
    }
  }
  if (cam_enabled) {
    if (cam_layers_override.empty()) {
      if (cam_k < 1 || cam_k >= N) {
        throw ConfigError(msg("config: cam.k (", cam_k, ") must satisfy 1 <= k < N (", N, ")"));
      }
    } else {
      for (int64_t l : cam_layers_override) {
        if (l < 1 || l >= N) {
          throw ConfigError(msg("config: cam.layers_override entry ", l,
                                " outside valid hook range [1, ", N - 1, "]"));
        }
      }
    }
  }
}

ModelConfig ModelConfig::from_kv(const KeyValues& kv) {
  ModelConfig c;
  c.N_I_max = kv.get_i64("N_I_max", c.N_I_max);
  c.H = kv.get_i64("H", c.H);
  c.W = kv.get_i64("W", c.W);
  c.S_C = kv.get_i64("S_C", c.S_C);
  c.D_C = kv.get_i64("D_C", c.D_C);
  c.S_S = kv.get_i64("S_S", c.S_S);
  c.D_S = kv.get_i64("D_S", c.D_S);
  c.S_I = kv.get_i64("S_I", c.S_I);
  c.D_I = kv.get_i64("D_I", c.D_I);
  c.D = kv.get_i64("D", c.D);
  c.N = kv.get_i64("N", c.N);
  c.S_D = kv.get_i64("S_D", c.S_D);
  c.D_D = kv.get_i64("D_D", c.D_D);
  c.vocab = kv.get_i64("vocab", c.vocab);
  c.heads = kv.get_i64("heads", c.heads);
  c.cem_enabled = kv.get_bool("cem.enabled", c.cem_enabled);
  c.cem_use_semantic_encoder =
      kv.get_bool("cem.use_semantic_encoder", c.cem_use_semantic_encoder);
  c.cam_enabled = kv.get_bool("cam.enabled", c.cam_enabled);
  c.cam_k = kv.get_i64("cam.k", c.cam_k);
  c.cam_layers_override = kv.get_i64_list("cam.layers_override");
  c.cam_share_qformer = kv.get_bool("cam.share_qformer", c.cam_share_qformer);
  c.use_qformer = kv.get_bool("use_qformer", c.use_qformer);
  c.validate();
  return c;
}

ModelConfig ModelConfig::from_file(const std::string& path) {
  return from_kv(KeyValues::from_file(path));
}

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  os << "N_I_max=" << N_I_max << "\nH=" << H << "\nW=" << W
     << "\nS_C=" << S_C << "\nD_C=" << D_C << "\nS_S=" << S_S << "\nD_S=" << D_S
     << "\nS_I=" << S_I << "\nD_I=" << D_I << "\nD=" << D << "\nN=" << N
     << "\nS_D=" << S_D << "\nD_D=" << D_D << "\nvocab=" << vocab
     << "\nheads=" << heads << "\ncem.enabled=" << (cem_enabled ? "true" : "false")
     << "\ncem.use_semantic_encoder=" << (cem_use_semantic_encoder ? "true" : "false")
     << "\ncam.enabled=" << (cam_enabled ? "true" : "false") << "\ncam.k=" << cam_k;
  if (!cam_layers_override.empty()) {
    os << "\ncam.layers_override=";
    for (size_t i = 0; i < cam_layers_override.size(); ++i) {
      if (i) os << ",";
      os << cam_layers_override[i];
    }
  }
  os << "\ncam.share_qformer=" << (cam_share_qformer ? "true" : "false")
     << "\nuse_qformer=" << (use_qformer ? "true" : "false") << "\n";
  return os.str();
}

void ModelConfig::write_file(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw IoError(msg("cannot write config: ", path));
  os << to_text();
}

TrainConfig TrainConfig::from_kv(const KeyValues& kv) {
  TrainConfig t;
  t.steps = kv.get_i64("train.steps", t.steps);
  t.batch = kv.get_i64("train.batch", t.batch);
  t.seed = static_cast<uint64_t>(kv.get_i64("train.seed", 0));
  t.base_lr = kv.get_f64("train.base_lr", t.base_lr);
  t.warmup_steps = kv.get_i64("train.warmup_steps", t.warmup_steps);
  t.total_steps = kv.get_i64("train.total_steps", t.total_steps);
  t.beta1 = kv.get_f64("train.beta1", t.beta1);
  t.beta2 = kv.get_f64("train.beta2", t.beta2);
  t.grad_clip = kv.get_f64("train.grad_clip", t.grad_clip);
  t.weight_decay = kv.get_f64("train.weight_decay", t.weight_decay);
  t.lambda_text = kv.get_f64("train.lambda_text", t.lambda_text);
  t.lambda_focal = kv.get_f64("train.lambda_focal", t.lambda_focal);
  t.lambda_dice = kv.get_f64("train.lambda_dice", t.lambda_dice);
  t.gamma = kv.get_f64("train.gamma", t.gamma);
  t.threads = kv.get_i64("train.threads", t.threads);
  return t;
}

}  // namespace calico
