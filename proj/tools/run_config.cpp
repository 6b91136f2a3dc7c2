#include "run_config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gdfm/errors.hpp"
#include "gdfm/version.hpp"

namespace gdfm::cli {

namespace {

const std::vector<std::string> kData{"estimate", "calibrate", "decompose"};

std::vector<std::string> data_and(std::vector<std::string> extra) {
  auto out = kData;
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string quote(const std::string& v) {
  std::string out = "\"";
  for (char c : v) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"estimate", "calibrate", "simulate", "montecarlo", "decompose", "report"};
  return names;
}

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs{
      {"data", "input panel CSV", kData},
      {"layout", "input layout: fredmd or plain", kData},
      {"transform", "apply the per-series transformation codes (true/false)", kData},
      {"r", "number of static factors", kData},
      {"p", "maximum lag order", data_and({"montecarlo"})},
      {"window", "rolling-window length in design rows", kData},
      {"calib_frac", "share of periods used for calibration", kData},
      {"grid_size", "number of penalty grid points", kData},
      {"grid_ratio", "smallest penalty as a fraction of lambda_max", kData},
      {"lambda", "fixed LASSO penalty (skips calibration)", {"estimate"}},
      {"calibrate_first", "calibrate the penalty per series before estimating", {"estimate"}},
      {"bandwidth", "HAC bandwidth: auto or a lag count", data_and({"montecarlo"})},
      {"p_values", "two_sided or one_sided", kData},
      {"outlier_iqr", "outlier threshold in interquartile ranges", kData},
      {"reestimate_per_window", "re-run PCA inside each calibration window", kData},
      {"series", "comma-separated series ids to estimate (default all)", kData},
      {"masks", "selection masks CSV from a previous estimate run", {"decompose"}},
      {"model", "simulation model", {"simulate", "montecarlo"}},
      {"T", "number of periods", {"simulate"}},
      {"n", "number of series", {"simulate"}},
      {"seed", "random seed (base seed for montecarlo)", {"simulate", "montecarlo"}},
      {"loading_seed", "seed for the model loadings", {"simulate", "montecarlo"}},
      {"burn_in", "discarded initial periods", {"simulate", "montecarlo"}},
      {"experiment", "coverage, rates, weak_size, weak_power or weak_share", {"montecarlo"}},
      {"replications", "number of replications", {"montecarlo"}},
      {"n_grid", "comma-separated cross-section sizes", {"montecarlo"}},
      {"t_grid", "comma-separated sample lengths", {"montecarlo"}},
      {"tracked", "series tracked per group", {"montecarlo"}},
      {"weak_pairs", "number of weak series pairs (benchmark model)", {"montecarlo"}},
      {"level", "test level", {"montecarlo"}},
      {"input", "output directory of an estimate run", {"report"}},
      {"threads", "worker threads", {}},
  };
  return specs;
}

std::map<std::string, std::string> command_defaults(const std::string& command) {
  std::map<std::string, std::string> d{{"threads", "1"}};
  if (command == "estimate" || command == "calibrate" || command == "decompose") {
    d.insert({{"layout", "fredmd"},
              {"transform", "true"},
              {"r", "8"},
              {"p", "24"},
              {"window", "488"},
              {"calib_frac", "0.8"},
              {"grid_size", "100"},
              {"grid_ratio", "0.001"},
              {"bandwidth", "auto"},
              {"p_values", "two_sided"},
              {"outlier_iqr", "10"},
              {"reestimate_per_window", "false"},
              {"series", ""}});
  } else if (command == "simulate") {
    d.insert({{"model", "benchmark"}, {"T", "1000"}, {"n", "200"}, {"seed", "1"}, {"loading_seed", "20240101"},
              {"burn_in", "500"}});
  } else if (command == "montecarlo") {
    d.insert({{"experiment", "coverage"},
              {"model", "benchmark"},
              {"replications", "500"},
              {"n_grid", "200"},
              {"t_grid", "1000"},
              {"seed", "1"},
              {"loading_seed", "20240101"},
              {"p", "1"},
              {"bandwidth", "auto"},
              {"burn_in", "500"},
              {"tracked", "4"},
              {"level", "0.05"}});
  }
  return d;
}

bool is_manifest_only_key(const std::string& key) {
  return key == "command" || key == "version" || key.ends_with("_sha256");
}

bool RunConfig::has(const std::string& key) const { return values.count(key) > 0; }

std::optional<std::string> RunConfig::find(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) return std::nullopt;
  return it->second;
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw ConfigError("missing required setting '" + key + "'");
  return it->second;
}

long RunConfig::get_int(const std::string& key) const {
  const auto& s = get(key);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("setting '" + key + "' is not an integer: " + s);
  return v;
}

double RunConfig::get_double(const std::string& key) const {
  const auto& s = get(key);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("setting '" + key + "' is not a number: " + s);
  return v;
}

bool RunConfig::get_bool(const std::string& key) const {
  const auto& s = get(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("setting '" + key + "' is not a boolean: " + s);
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const {
  std::vector<std::string> out;
  const auto opt = find(key);
  if (!opt) return out;
  std::stringstream in(*opt);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<long> RunConfig::get_int_list(const std::string& key) const {
  std::vector<long> out;
  for (const auto& item : get_list(key)) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      throw ConfigError("setting '" + key + "' has a non-integer entry: " + item);
    }
    out.push_back(v);
  }
  return out;
}

std::map<std::string, std::string> read_flat_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      std::string unq;
      for (std::size_t i = 1; i + 1 < value.size(); ++i) {
        if (value[i] == '\\' && i + 2 < value.size()) ++i;
        unq += value[i];
      }
      value = unq;
    }
    if (key.empty()) throw ConfigError(path.string() + ":" + std::to_string(number) + ": empty key");
    out[key] = value;
  }
  return out;
}

std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buffer(1 << 16);
  while (in) {
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

void write_manifest(const RunConfig& config, const std::map<std::string, std::string>& checksums) {
  std::filesystem::create_directories(config.out);
  std::ofstream out(config.out / "manifest.toml", std::ios::binary);
  if (!out) throw ConfigError("cannot write manifest in " + config.out.string());
  out << "# gdfm run manifest; rerun with: gdfm rerun --manifest manifest.toml --out DIR\n";
  out << "command = " << quote(config.command) << '\n';
  out << "version = " << quote(kVersion) << '\n';
  for (const auto& [key, sum] : checksums) out << key << "_sha256 = " << quote(sum) << '\n';
  out << "\n[config]\n";
  for (const auto& [key, value] : config.values) out << key << " = " << quote(value) << '\n';
}

}  // namespace gdfm::cli
