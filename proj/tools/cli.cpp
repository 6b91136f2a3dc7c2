#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <ostream>

#include "commands.hpp"
#include "gdfm/errors.hpp"
#include "gdfm/version.hpp"
#include "run_config.hpp"

namespace gdfm::cli {

namespace {

std::string flag_name(const std::string& key) {
  std::string out = key;
  std::replace(out.begin(), out.end(), '_', '-');
  return out;
}

bool applies(const KeySpec& spec, const std::string& command) {
  return spec.commands.empty() ||
         std::find(spec.commands.begin(), spec.commands.end(), command) != spec.commands.end();
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
      return kExitConfig;
    case ErrorKind::data:
      return kExitData;
    case ErrorKind::numerical:
      return kExitNumerical;
  }
  return kExitNumerical;
}

void write_error(const std::filesystem::path& dir, const std::string& tag, const std::string& message, int code) {
  if (dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream out(dir / "error.json", std::ios::binary);
  if (!out) return;
  nlohmann::ordered_json j;
  j["error"] = tag;
  j["message"] = message;
  j["exit_code"] = code;
  out << j.dump(2) << '\n';
}

void dispatch(const RunConfig& config, std::ostream& log) {
  const auto& c = config.command;
  if (c == "estimate") return run_estimate(config, log);
  if (c == "calibrate") return run_calibrate(config, log);
  if (c == "simulate") return run_simulate(config, log);
  if (c == "montecarlo") return run_montecarlo(config, log);
  if (c == "decompose") return run_decompose(config, log);
  if (c == "report") return run_report(config, log);
  throw ConfigError("unknown command '" + c + "'");
}

std::string describe(const std::string& command) {
  static const std::map<std::string, std::string> text{
      {"estimate", "select lag bases, run HAC inference and decompose a panel"},
      {"calibrate", "rolling-window penalty calibration only"},
      {"simulate", "write a panel drawn from a state-space model"},
      {"montecarlo", "run a Monte Carlo experiment on simulated panels"},
      {"decompose", "decompose a panel with masks from an earlier estimate run"},
      {"report", "summarize the output directory of an estimate run"},
  };
  return text.at(command);
}

std::filesystem::path default_out() {
  if (const char* env = std::getenv("GDFM_OUTPUT_DIR"); env && *env) return env;
  return "gdfm-out";
}

void validate_keys(const std::string& command, const std::map<std::string, std::string>& values,
                   const std::string& origin) {
  for (const auto& [key, value] : values) {
    if (is_manifest_only_key(key) || key == "out") continue;
    const auto& specs = key_specs();
    const auto it = std::find_if(specs.begin(), specs.end(), [&](const KeySpec& s) { return s.key == key; });
    if (it == specs.end() || !applies(*it, command)) {
      throw ConfigError(origin + ": setting '" + key + "' does not apply to command '" + command + "'");
    }
  }
}

// Resolves defaults, file settings and flags, then derives the settings that
// depend on each other.
void resolve(RunConfig& config, const std::string& command, const std::map<std::string, std::string>& file_values,
             const std::map<std::string, std::string>& flag_values, const std::string& out_flag) {
  if (!out_flag.empty()) {
    config.out = out_flag;
  } else if (const auto it = file_values.find("out"); it != file_values.end()) {
    config.out = it->second;
  } else {
    config.out = default_out();
  }
  validate_keys(command, file_values, "config");
  config.command = command;
  config.values = command_defaults(command);
  for (const auto& [k, v] : file_values) {
    if (!is_manifest_only_key(k) && k != "out") config.values[k] = v;
  }
  for (const auto& [k, v] : flag_values) config.values[k] = v;

  if (command == "estimate") {
    const bool forced = flag_values.count("calibrate_first") && flag_values.at("calibrate_first") == "true";
    if (forced && flag_values.count("lambda")) throw ConfigError("--lambda and --calibrate-first are exclusive");
    if (forced) config.values.erase("lambda");
    config.values["calibrate_first"] = config.has("lambda") ? "false" : "true";
  }
  for (const char* key : {"data", "masks", "input"}) {
    if (const auto v = config.find(key)) {
      std::error_code ec;
      const auto abs = std::filesystem::absolute(*v, ec);
      if (!ec) config.values[key] = abs.lexically_normal().string();
    }
  }
  for (const auto& k : {"data", "masks", "input"}) {
    if (const auto v = config.find(k); v && !std::filesystem::exists(*v)) {
      throw ConfigError(std::string(k) + " path does not exist: " + *v);
    }
  }
  if ((command == "estimate" || command == "calibrate" || command == "decompose") && !config.has("data")) {
    throw ConfigError(command + " needs --data");
  }
  if (command == "decompose" && !config.has("masks")) throw ConfigError("decompose needs --masks");
  if (command == "report" && !config.has("input")) throw ConfigError("report needs --input");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamic factor model estimation with weak factors"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::map<std::string, std::map<std::string, std::string>> flags;
  std::map<std::string, std::string> config_paths, out_flags;
  for (const auto& command : command_names()) {
    auto* sub = app.add_subcommand(command, describe(command));
    sub->add_option("--config", config_paths[command], "flat key = value settings file");
    sub->add_option("--out", out_flags[command], "output directory (default $GDFM_OUTPUT_DIR or ./gdfm-out)");
    for (const auto& spec : key_specs()) {
      if (!applies(spec, command)) continue;
      auto& slot = flags[command];
      const std::string key = spec.key;
      if (key == "calibrate_first") {
        sub->add_flag_callback("--" + flag_name(key), [&slot, key] { slot[key] = "true"; }, spec.help);
        continue;
      }
      std::string names = "--" + flag_name(key);
      if (key.find('_') != std::string::npos) names += ",--" + key;
      sub->add_option_function<std::string>(names, [&slot, key](const std::string& v) { slot[key] = v; }, spec.help);
    }
  }
  std::string manifest, rerun_out;
  long rerun_threads = 0;
  auto* rerun = app.add_subcommand("rerun", "repeat a run from its manifest.toml");
  rerun->add_option("--manifest", manifest, "manifest file")->required();
  rerun->add_option("--out", rerun_out, "output directory");
  rerun->add_option("--threads", rerun_threads, "override worker threads");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  RunConfig config;
  try {
    auto* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    if (command == "rerun") {
      auto values = read_flat_config(manifest);
      if (!values.count("command")) throw ConfigError("manifest has no command");
      const std::string original = values.at("command");
      std::map<std::string, std::string> overrides;
      if (rerun_threads > 0) overrides["threads"] = std::to_string(rerun_threads);
      resolve(config, original, values, overrides, rerun_out);
      for (const auto& [key, sum] : input_checksums(config)) {
        const auto it = values.find(key + "_sha256");
        if (it != values.end() && it->second != sum) {
          throw StructuralError("input '" + key + "' changed since the manifest was written (checksum mismatch)");
        }
      }
    } else {
      std::map<std::string, std::string> file_values;
      if (!config_paths[command].empty()) file_values = read_flat_config(config_paths[command]);
      resolve(config, command, file_values, flags[command], out_flags[command]);
    }
    write_manifest(config, input_checksums(config));
    dispatch(config, out);
    return kExitOk;
  } catch (const Error& e) {
    const int code = exit_code(e.kind());
    err << "error [" << e.tag() << "]: " << e.what() << '\n';
    write_error(config.out, e.tag(), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    write_error(config.out, "internal_error", e.what(), kExitNumerical);
    return kExitNumerical;
  }
}

}  // namespace gdfm::cli
