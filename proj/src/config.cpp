#include "medmesh/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "medmesh/error.hpp"

namespace medmesh {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& want) {
  throw Error(ErrorKind::ConfigError, key + ": expected " + want + ", got '" + value + "'");
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  if (!s.empty() && s.back() == ',') out.push_back("");
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value, const char* want) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (value.empty() || ec != std::errc() || ptr != end) bad(key, value, want);
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  return parse_number<double>(key, value, "a real number");
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  if (!value.empty() && value[0] == '-') bad(key, value, "a non-negative integer");
  return parse_number<std::size_t>(key, value, "a non-negative integer");
}

int parse_int(const std::string& key, const std::string& value) {
  return parse_number<int>(key, value, "an integer");
}

bool parse_flag(const std::string& key, const std::string& value) {
  if (value == "true" || value == "True" || value == "1") return true;
  if (value == "false" || value == "False" || value == "0") return false;
  bad(key, value, "true or false");
}

// Accepts an optional surrounding [ ] so bracketed lists like [32, 64] work too.
std::string strip_brackets(const std::string& value) {
  if (value.size() >= 2 && value.front() == '[' && value.back() == ']') return value.substr(1, value.size() - 2);
  return value;
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& key, const std::string& value, F parse_item) {
  std::vector<T> out;
  const std::string inner = trim(strip_brackets(value));
  if (inner.empty()) return out;
  for (const std::string& item : split_list(inner)) out.push_back(parse_item(key, item));
  return out;
}

std::string real_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T, typename F>
std::string join(const std::vector<T>& values, F fmt) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + fmt(values[i]);
  return out;
}

}  // namespace

void RunConfig::validate() const {
  try {
    net.validate();
    train.validate(net.num_classes);
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigError, e.what());
  }
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "arch",        "ncf",         "pool_res",   "ninput_edges", "res_blocks",    "init_type",
      "init_gain",   "num_classes", "norm_inference", "batch_size", "lr",           "lr_policy",     "beta1",
      "num_aug",     "flip_edges",  "scale_verts", "slide_verts", "weighted_loss", "epochs",
      "decay_epochs", "seed",       "threads",    "dataroot",     "checkpoints_dir", "name"};
  return keys;
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::ConfigError, "line " + std::to_string(number) + ": missing '='");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorKind::ConfigError, "line " + std::to_string(number) + ": empty key");
    if (!out.emplace(key, trim(line.substr(eq + 1))).second)
      throw Error(ErrorKind::ConfigError, "line " + std::to_string(number) + ": duplicate key " + key);
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  NetworkConfig& n = cfg.net;
  TrainConfig& t = cfg.train;
  if (key == "arch") n.arch = value;
  else if (key == "ncf") n.ncf = parse_list<int>(key, value, parse_int);
  else if (key == "pool_res") n.pool_res = parse_list<std::size_t>(key, value, parse_count);
  else if (key == "ninput_edges") n.ninput_edges = parse_count(key, value);
  else if (key == "res_blocks") n.res_blocks = parse_int(key, value);
  else if (key == "init_type") n.init_type = value;
  else if (key == "init_gain") n.init_gain = parse_real(key, value);
  else if (key == "num_classes") n.num_classes = parse_int(key, value);
  else if (key == "norm_inference") n.norm_inference = value;
  else if (key == "batch_size") t.batch_size = parse_count(key, value);
  else if (key == "lr") t.lr = parse_real(key, value);
  else if (key == "lr_policy") t.lr_policy = value;
  else if (key == "beta1") t.beta1 = parse_real(key, value);
  else if (key == "num_aug") t.num_aug = parse_count(key, value);
  else if (key == "flip_edges") t.flip_edges = parse_real(key, value);
  else if (key == "scale_verts") t.scale_verts = parse_flag(key, value);
  else if (key == "slide_verts") t.slide_verts = parse_real(key, value);
  else if (key == "weighted_loss") t.weighted_loss = parse_list<double>(key, value, parse_real);
  else if (key == "epochs") t.epochs = parse_int(key, value);
  else if (key == "decay_epochs") t.decay_epochs = parse_int(key, value);
  else if (key == "seed") t.seed = parse_number<std::uint64_t>(key, value, "a non-negative integer");
  else if (key == "threads") t.threads = parse_int(key, value);
  else if (key == "dataroot") cfg.dataroot = value;
  else if (key == "checkpoints_dir") cfg.checkpoints_dir = value;
  else if (key == "name") cfg.name = value;
  else throw Error(ErrorKind::ConfigError, "unknown config key '" + key + "'");
}

std::string to_config_text(const RunConfig& cfg) {
  const NetworkConfig& n = cfg.net;
  const TrainConfig& t = cfg.train;
  auto num = [](auto v) { return std::to_string(v); };
  std::ostringstream out;
  out << "arch=" << n.arch << '\n'
      << "ncf=" << join(n.ncf, num) << '\n'
      << "pool_res=" << join(n.pool_res, num) << '\n'
      << "ninput_edges=" << n.ninput_edges << '\n'
      << "res_blocks=" << n.res_blocks << '\n'
      << "init_type=" << n.init_type << '\n'
      << "init_gain=" << real_text(n.init_gain) << '\n'
      << "num_classes=" << n.num_classes << '\n'
      << "norm_inference=" << n.norm_inference << '\n'
      << "batch_size=" << t.batch_size << '\n'
      << "lr=" << real_text(t.lr) << '\n'
      << "lr_policy=" << t.lr_policy << '\n'
      << "beta1=" << real_text(t.beta1) << '\n'
      << "num_aug=" << t.num_aug << '\n'
      << "flip_edges=" << real_text(t.flip_edges) << '\n'
      << "scale_verts=" << (t.scale_verts ? "true" : "false") << '\n'
      << "slide_verts=" << real_text(t.slide_verts) << '\n'
      << "weighted_loss=" << join(t.weighted_loss, real_text) << '\n'
      << "epochs=" << t.epochs << '\n'
      << "decay_epochs=" << t.decay_epochs << '\n'
      << "seed=" << t.seed << '\n'
      << "threads=" << t.threads << '\n'
      << "dataroot=" << cfg.dataroot << '\n'
      << "checkpoints_dir=" << cfg.checkpoints_dir << '\n'
      << "name=" << cfg.name << '\n';
  return out.str();
}

void write_config_file(const RunConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << to_config_text(cfg);
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

}  // namespace medmesh
