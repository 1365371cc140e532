#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rifs/cluster.hpp"
#include "rifs/delay_search.hpp"
#include "rifs/hdi.hpp"

namespace rifs {

// One experiment. Loaded from an INI file with the sections
//
//   [system]   name, spec, chain, observable, length, burn_in, seed, x0
//   [delay]    l (0 or "auto" searches 2..l_max), l_max
//   [cluster]  neighbors, ambiguity, merge_threshold, expected_k, ...
//   [unembed]  min_edge_fraction
//   [hdi]      hidden (count or "auto"), degree, restarts, max_iterations, learning_rate, ...
//   [output]   dir
//
// and then overridden by "section.key=value" settings.
struct PipelineConfig {
  std::string system = "henon";  // built-in generator set, ignored when spec is set
  std::string spec;              // path to a polynomial generator spec
  std::string chain;             // path to a transition matrix; empty means uniform
  std::string observable = "coord:1";
  std::size_t length = 10000;
  std::size_t burn_in = 100;
  std::optional<std::uint64_t> seed;
  std::vector<double> x0;  // empty: origin

  int l = 3;  // 0: search
  int l_max = 6;
  DelayQuality quality;
  ClusterParams cluster;
  double min_edge_fraction = 0.01;  // label transitions rarer than this are dropped before unembedding

  int hidden = -1;  // -1: intrinsic dimension of the clusters minus one
  int degree = 2;
  FitOptions fit;

  std::filesystem::path output_dir = "run";
};

// "logistic3", "henon" or "sierpinski". The seed is left unset.
PipelineConfig preset_config(const std::string& name);

PipelineConfig load_config(std::istream& is);
PipelineConfig load_config_file(const std::filesystem::path& path);

// key is "section.key"; throws Config errors for unknown keys or bad values.
void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value);
// "section.key=value"
void apply_assignment(PipelineConfig& cfg, const std::string& assignment);

// Replaces the output directory with $RIFS_OUTPUT_DIR when that is set.
void apply_environment(PipelineConfig& cfg);

// Names resolve, lengths are positive and, when require_seed, a seed is set.
void validate(const PipelineConfig& cfg, bool require_seed = true);

// Every setting except the output directory, in load_config syntax.
void write_config(std::ostream& os, const PipelineConfig& cfg);

inline constexpr const char* kOutputDirEnv = "RIFS_OUTPUT_DIR";

}  // namespace rifs
