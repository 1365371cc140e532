// rifs-cli: runs the learning pipeline or any single stage of it.
//
// Exit codes: 0 success, 1 configuration or usage error, 2 stage failure.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rifs/rifs.h"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitStage = 2;

struct Options {
  std::string config_path;
  std::string preset;
  std::vector<std::string> settings;
  std::optional<unsigned long long> seed;
  std::string out;
};

struct ConfigError {
  std::string message;
};

struct ConfigHandle {
  rifs_config* ptr = nullptr;
  ~ConfigHandle() { rifs_config_free(ptr); }
};

void check_config(rifs_status s) {
  if (s != RIFS_OK) throw ConfigError{rifs_last_error()};
}

// File or preset first, then RIFS_OUTPUT_DIR, then --set, then --seed/--out.
// Stage commands without --config/--preset reuse the run directory's
// config.ini when there is one.
void build_config(const Options& o, bool stage_command, ConfigHandle& h) {
  if (!o.config_path.empty() && !o.preset.empty()) throw ConfigError{"--config and --preset are exclusive"};
  if (!o.config_path.empty()) {
    check_config(rifs_config_load(o.config_path.c_str(), &h.ptr));
  } else if (!o.preset.empty()) {
    check_config(rifs_config_preset(o.preset.c_str(), &h.ptr));
  } else {
    std::string dir = o.out;
    if (dir.empty())
      if (const char* env = std::getenv("RIFS_OUTPUT_DIR"); env && *env) dir = env;
    if (dir.empty()) dir = "run";
    const std::filesystem::path saved = std::filesystem::path(dir) / "config.ini";
    if (stage_command && std::filesystem::exists(saved))
      check_config(rifs_config_load(saved.string().c_str(), &h.ptr));
    else
      check_config(rifs_config_default(&h.ptr));
    check_config(rifs_config_set(h.ptr, "output.dir", dir.c_str()));
  }
  check_config(rifs_config_apply_env(h.ptr));
  for (const auto& s : o.settings) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError{"--set expects section.key=value, got '" + s + "'"};
    check_config(rifs_config_set(h.ptr, s.substr(0, eq).c_str(), s.substr(eq + 1).c_str()));
  }
  if (o.seed) check_config(rifs_config_set(h.ptr, "system.seed", std::to_string(*o.seed).c_str()));
  if (!o.out.empty()) check_config(rifs_config_set(h.ptr, "output.dir", o.out.c_str()));
}

int stage_failure(const char* fallback_stage) {
  const char* stage = rifs_last_stage();
  std::fprintf(stderr, "rifs-cli: stage %s failed: %s\n", *stage ? stage : fallback_stage, rifs_last_error());
  return kExitStage;
}

void print_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::cout << in.rdbuf();
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("-c,--config", o.config_path, "INI experiment file")->check(CLI::ExistingFile);
  cmd->add_option("-p,--preset", o.preset, "logistic3, henon or sierpinski");
  cmd->add_option("-s,--set", o.settings, "override, section.key=value (repeatable)");
  cmd->add_option("-o,--out", o.out, "run directory (overrides RIFS_OUTPUT_DIR and output.dir)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn random iterated function systems from scalar time series"};
  app.require_subcommand(1);
  Options o;

  auto* pipeline = app.add_subcommand("pipeline", "run every stage and write a manifest");
  add_common(pipeline, o);
  pipeline->add_option("--seed", o.seed, "random seed")->required();

  struct StageCommand {
    const char* name;
    const char* help;
    rifs_stage stage;
    bool needs_seed;
  };
  const StageCommand stages[] = {
      {"simulate", "simulate the system and write observations", RIFS_STAGE_SIMULATE, true},
      {"embed", "build delay vectors (searching l when delay.l = auto)", RIFS_STAGE_EMBED, false},
      {"cluster", "cluster delay vectors into sub-manifolds", RIFS_STAGE_CLUSTER, false},
      {"unembed", "recover the driving chain from cluster transitions", RIFS_STAGE_UNEMBED, false},
      {"fit", "fit per-symbol polynomial dynamics with hidden variables", RIFS_STAGE_FIT, true},
      {"evaluate", "compare a run with its ground truth", RIFS_STAGE_EVALUATE, false},
      {"plot", "write SVG plots of a run", RIFS_STAGE_PLOT, false},
  };
  std::vector<CLI::App*> stage_cmds;
  for (const auto& s : stages) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, o);
    cmd->add_option("--seed", o.seed, "random seed");
    stage_cmds.push_back(cmd);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  ConfigHandle cfg;
  try {
    if (pipeline->parsed()) {
      build_config(o, false, cfg);
      check_config(rifs_config_validate(cfg.ptr, 1));
      rifs_run* run = nullptr;
      rifs_status st = rifs_run_pipeline(cfg.ptr, &run);
      if (st != RIFS_OK) {
        if (*rifs_last_stage() == '\0' || std::string(rifs_last_stage()) == "config" ||
            std::string(rifs_last_stage()) == "setup")
          throw ConfigError{rifs_last_error()};
        return stage_failure("pipeline");
      }
      std::cout << "run directory " << rifs_run_dir(run) << '\n';
      print_file(std::filesystem::path(rifs_run_dir(run)) / "evaluation.txt");
      rifs_run_free(run);
      return 0;
    }
    for (std::size_t i = 0; i < stage_cmds.size(); ++i) {
      if (!stage_cmds[i]->parsed()) continue;
      const StageCommand& s = stages[i];
      build_config(o, true, cfg);
      check_config(rifs_config_validate(cfg.ptr, s.needs_seed ? 1 : 0));
      const std::string dir = rifs_config_output_dir(cfg.ptr);
      if (rifs_run_stage(cfg.ptr, s.stage, dir.c_str()) != RIFS_OK) return stage_failure(s.name);
      if (s.stage == RIFS_STAGE_EVALUATE) print_file(std::filesystem::path(dir) / "evaluation.txt");
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "rifs-cli: configuration error: %s\n", e.message.c_str());
    return kExitConfig;
  }
  return kExitConfig;
}
