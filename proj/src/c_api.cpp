#include "rifs/rifs.h"

#include <new>
#include <sstream>
#include <string>

#include "rifs/io.hpp"
#include "rifs/pipeline.hpp"

struct rifs_config {
  rifs::PipelineConfig cfg;
  std::string output_dir;
};

struct rifs_run {
  rifs::RunArtifacts artifacts;
  std::string dir;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_stage;

rifs_status to_status(rifs::ErrorCode c) {
  switch (c) {
    case rifs::ErrorCode::InvalidArgument: return RIFS_E_INVALID_ARGUMENT;
    case rifs::ErrorCode::Domain: return RIFS_E_DOMAIN;
    case rifs::ErrorCode::Inconsistent: return RIFS_E_INCONSISTENT;
    case rifs::ErrorCode::Numerical: return RIFS_E_NUMERICAL;
    case rifs::ErrorCode::Io: return RIFS_E_IO;
    case rifs::ErrorCode::Config: return RIFS_E_CONFIG;
  }
  return RIFS_E_INTERNAL;
}

template <class Fn>
rifs_status guarded(Fn&& fn) {
  g_error.clear();
  g_stage.clear();
  try {
    fn();
    return RIFS_OK;
  } catch (const rifs::StageError& e) {
    g_error = e.what();
    g_stage = e.stage();
    return to_status(e.code());
  } catch (const rifs::Error& e) {
    g_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_error = "out of memory";
    return RIFS_E_INTERNAL;
  } catch (const std::exception& e) {
    g_error = e.what();
    return RIFS_E_INTERNAL;
  }
}

rifs_status null_arg(const char* what) {
  g_error = std::string(what) + " is null";
  g_stage.clear();
  return RIFS_E_INVALID_ARGUMENT;
}

rifs_config* wrap(rifs::PipelineConfig cfg) {
  auto* c = new rifs_config{std::move(cfg), {}};
  c->output_dir = c->cfg.output_dir.string();
  return c;
}

}  // namespace

extern "C" {

const char* rifs_version(void) { return "1.0.0"; }
const char* rifs_last_error(void) { return g_error.c_str(); }
const char* rifs_last_stage(void) { return g_stage.c_str(); }

const char* rifs_stage_name(rifs_stage stage) {
  switch (stage) {
    case RIFS_STAGE_SIMULATE: return "simulate";
    case RIFS_STAGE_EMBED: return "embed";
    case RIFS_STAGE_CLUSTER: return "cluster";
    case RIFS_STAGE_UNEMBED: return "unembed";
    case RIFS_STAGE_FIT: return "fit";
    case RIFS_STAGE_EVALUATE: return "evaluate";
    case RIFS_STAGE_PLOT: return "plot";
    case RIFS_STAGE_MANIFEST: return "manifest";
  }
  return "unknown";
}

rifs_status rifs_config_default(rifs_config** out) {
  if (!out) return null_arg("out");
  return guarded([&] { *out = wrap({}); });
}

rifs_status rifs_config_preset(const char* name, rifs_config** out) {
  if (!name) return null_arg("name");
  if (!out) return null_arg("out");
  return guarded([&] { *out = wrap(rifs::preset_config(name)); });
}

rifs_status rifs_config_load(const char* path, rifs_config** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] { *out = wrap(rifs::load_config_file(path)); });
}

rifs_status rifs_config_set(rifs_config* cfg, const char* key, const char* value) {
  if (!cfg) return null_arg("cfg");
  if (!key || !value) return null_arg("key/value");
  return guarded([&] {
    rifs::apply_setting(cfg->cfg, key, value);
    cfg->output_dir = cfg->cfg.output_dir.string();
  });
}

rifs_status rifs_config_apply_env(rifs_config* cfg) {
  if (!cfg) return null_arg("cfg");
  return guarded([&] {
    rifs::apply_environment(cfg->cfg);
    cfg->output_dir = cfg->cfg.output_dir.string();
  });
}

rifs_status rifs_config_validate(const rifs_config* cfg, int require_seed) {
  if (!cfg) return null_arg("cfg");
  return guarded([&] { rifs::validate(cfg->cfg, require_seed != 0); });
}

rifs_status rifs_config_save(const rifs_config* cfg, const char* path) {
  if (!cfg) return null_arg("cfg");
  if (!path) return null_arg("path");
  return guarded([&] {
    std::ostringstream os;
    rifs::write_config(os, cfg->cfg);
    rifs::write_file(path, os.str());
  });
}

const char* rifs_config_output_dir(const rifs_config* cfg) { return cfg ? cfg->output_dir.c_str() : ""; }

void rifs_config_free(rifs_config* cfg) { delete cfg; }

rifs_status rifs_run_stage(const rifs_config* cfg, rifs_stage stage, const char* dir) {
  if (!cfg) return null_arg("cfg");
  if (!dir) return null_arg("dir");
  return guarded([&] {
    const std::filesystem::path d = dir;
    try {
      switch (stage) {
        case RIFS_STAGE_SIMULATE:
          std::filesystem::create_directories(d);
          {
            std::ostringstream os;
            rifs::write_config(os, cfg->cfg);
            rifs::write_file(d / rifs::run_files::kConfig, os.str());
          }
          rifs::stage_simulate(cfg->cfg, d);
          break;
        case RIFS_STAGE_EMBED: rifs::stage_embed(cfg->cfg, d); break;
        case RIFS_STAGE_CLUSTER: rifs::stage_cluster(cfg->cfg, d); break;
        case RIFS_STAGE_UNEMBED: rifs::stage_unembed(cfg->cfg, d); break;
        case RIFS_STAGE_FIT: rifs::stage_fit(cfg->cfg, d); break;
        case RIFS_STAGE_EVALUATE: {
          std::ostringstream os;
          rifs::write_evaluation(os, rifs::evaluate_run(rifs::RunArtifacts{d, {}}));
          rifs::write_file(d / rifs::run_files::kEvaluation, os.str());
          break;
        }
        case RIFS_STAGE_PLOT: rifs::emit_plots(rifs::RunArtifacts{d, {}}); break;
        case RIFS_STAGE_MANIFEST: rifs::write_manifest(rifs::collect_artifacts(d)); break;
        default: rifs::fail(rifs::ErrorCode::InvalidArgument, "unknown stage");
      }
    } catch (const rifs::Error& e) {
      throw rifs::StageError(rifs_stage_name(stage), e);
    }
  });
}

rifs_status rifs_run_pipeline(const rifs_config* cfg, rifs_run** out) {
  if (!cfg) return null_arg("cfg");
  if (!out) return null_arg("out");
  return guarded([&] {
    rifs::RunArtifacts a = rifs::run_pipeline(cfg->cfg);
    *out = new rifs_run{a, a.dir.string()};
  });
}

rifs_status rifs_run_open(const char* dir, rifs_run** out) {
  if (!dir) return null_arg("dir");
  if (!out) return null_arg("out");
  return guarded([&] {
    rifs::RunArtifacts a = rifs::collect_artifacts(dir);
    *out = new rifs_run{a, a.dir.string()};
  });
}

const char* rifs_run_dir(const rifs_run* run) { return run ? run->dir.c_str() : ""; }

size_t rifs_run_file_count(const rifs_run* run) { return run ? run->artifacts.files.size() : 0; }

const char* rifs_run_file(const rifs_run* run, size_t index) {
  if (!run || index >= run->artifacts.files.size()) return nullptr;
  return run->artifacts.files[index].c_str();
}

rifs_status rifs_run_evaluate(const rifs_run* run, rifs_evaluation* out) {
  if (!run) return null_arg("run");
  if (!out) return null_arg("out");
  return guarded([&] {
    rifs::EvaluationReport r = rifs::evaluate_run(run->artifacts);
    *out = rifs_evaluation{r.purity, r.clusters, r.true_symbols, r.recovered_symbols, r.p_error, r.mse, r.box_overlap};
  });
}

void rifs_run_free(rifs_run* run) { delete run; }

}  // extern "C"
