#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <unistd.h>

#include "rifs/config.hpp"
#include "rifs/error.hpp"
#include "rifs/markov.hpp"
#include "rifs/pipeline.hpp"
#include "rifs/plot.hpp"

using namespace rifs;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("rifs_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PipelineConfig small_logistic(const fs::path& dir) {
  auto cfg = preset_config("logistic3");
  cfg.seed = 1;
  cfg.output_dir = dir;
  return cfg;
}

}  // namespace

TEST_CASE("config files and presets and overrides") {
  std::istringstream ini(
      "[system]\nname = sierpinski\nlength = 3000\nseed = 9\n"
      "[delay]\nl = auto\nl_max = 4\n"
      "[hdi]\nhidden = 2\ndegree = 3\n"
      "[output]\ndir = somewhere\n");
  auto cfg = load_config(ini);
  CHECK(cfg.system == "sierpinski");
  CHECK(cfg.observable == preset_config("sierpinski").observable);
  CHECK(cfg.length == 3000);
  CHECK(cfg.seed == 9u);
  CHECK(cfg.l == 0);
  CHECK(cfg.l_max == 4);
  CHECK(cfg.hidden == 2);
  CHECK(cfg.degree == 3);
  CHECK(cfg.output_dir == fs::path("somewhere"));

  apply_assignment(cfg, "hdi.degree=4");
  CHECK(cfg.degree == 4);
  apply_setting(cfg, "delay.l", "3");
  CHECK(cfg.l == 3);
  apply_setting(cfg, "hdi.hidden", "auto");
  CHECK(cfg.hidden == -1);
  CHECK_THROWS_AS(apply_setting(cfg, "delay.nope", "1"), Error);
  CHECK_THROWS_AS(apply_setting(cfg, "hdi.degree", "two"), Error);
  CHECK_THROWS_AS(apply_assignment(cfg, "hdi.degree"), Error);
  CHECK_THROWS_AS(preset_config("lorenz"), Error);

  std::istringstream bad("[system]\nname = henon\ncolour = blue\n");
  CHECK_THROWS_AS(load_config(bad), Error);
}

TEST_CASE("validation requires a seed for full runs") {
  auto cfg = preset_config("henon");
  CHECK_THROWS_AS(validate(cfg), Error);
  CHECK_NOTHROW(validate(cfg, false));
  cfg.seed = 3;
  CHECK_NOTHROW(validate(cfg));
  cfg.min_edge_fraction = 1.0;
  CHECK_THROWS_AS(validate(cfg), Error);
}

TEST_CASE("environment overrides the output directory") {
  auto cfg = preset_config("henon");
  ::setenv(kOutputDirEnv, "/tmp/rifs_env_dir", 1);
  apply_environment(cfg);
  ::unsetenv(kOutputDirEnv);
  CHECK(cfg.output_dir == fs::path("/tmp/rifs_env_dir"));
  auto other = preset_config("henon");
  apply_environment(other);
  CHECK(other.output_dir == fs::path("run"));
}

TEST_CASE("written configs load back to the same settings") {
  auto cfg = preset_config("sierpinski");
  cfg.seed = 77;
  cfg.x0 = {0.1, -0.2};
  cfg.l = 0;
  cfg.fit.restarts = 2;
  std::stringstream ss;
  write_config(ss, cfg);
  CHECK(ss.str().find("dir") == std::string::npos);
  auto back = load_config(ss);
  std::stringstream again;
  write_config(again, back);
  CHECK(again.str() == ss.str());
  CHECK(back.x0 == cfg.x0);
  CHECK(back.seed == 77u);
}

TEST_CASE("driving sequence from labels and tuples") {
  // tuples of the 2-state chain at m = 2, labels of the exact word sequence
  TupleAssignment phi;
  phi.m = 2;
  phi.tuples = {{1, {1, 1}}, {2, {1, 2}}, {3, {2, 1}}, {4, {2, 2}}};
  std::vector<int> x{1, 1, 2, 2, 2, 1, 2, 1, 1};
  std::vector<int> labels;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) labels.push_back(1 + 2 * (x[i] - 1) + (x[i + 1] - 1));
  auto om = derive_driving(labels, phi, 2, x.size());
  CHECK(om.symbols == x);

  labels[3] = kGap;
  labels[4] = kGap;
  auto gapped = derive_driving(labels, phi, 2, x.size());
  CHECK(gapped[4] == kGap);
  CHECK(gapped[3] == x[3]);
  CHECK(gapped[5] == x[5]);

  // two votes disagreeing on one step leave it unknown
  std::vector<int> tie{1, 4};  // (1,1) then (2,2): step 1 gets 1 and 2
  auto t = derive_driving(tie, phi, 2, 3);
  CHECK(t.symbols == std::vector<int>{1, kGap, 2});
}

TEST_CASE("longest gap-free run") {
  CHECK(longest_known_run(SymbolSequence{2, {1, kGap, 1, 2, 2, kGap, 1}}) == std::pair<std::size_t, std::size_t>{2, 5});
  CHECK(longest_known_run(SymbolSequence{2, {1, 2}}) == std::pair<std::size_t, std::size_t>{0, 2});
  auto none = longest_known_run(SymbolSequence{2, {kGap, kGap}});
  CHECK(none.first == none.second);
}

TEST_CASE("matrix error is taken over relabelings") {
  auto P = TransitionMatrix::from_rows({{0.2, 0.8, 0.0}, {0.0, 0.3, 0.7}, {0.6, 0.0, 0.4}});
  // relabel 1 -> 3, 2 -> 1, 3 -> 2
  auto Q = TransitionMatrix::from_rows({{0.3, 0.7, 0.0}, {0.0, 0.4, 0.6}, {0.8, 0.0, 0.2}});
  CHECK(matrix_error_up_to_permutation(Q, P) == 0.0);
  auto R = TransitionMatrix::from_rows({{0.3, 0.7, 0.0}, {0.0, 0.45, 0.55}, {0.8, 0.0, 0.2}});
  CHECK(matrix_error_up_to_permutation(R, P) == doctest::Approx(0.05));
  CHECK(std::isinf(matrix_error_up_to_permutation(TransitionMatrix::uniform(2), P)));
}

TEST_CASE("lag-1 bounding-box overlap") {
  std::vector<double> a{0, 1, 0, 1}, b{0, 2, 0, 2};
  CHECK(lag1_box_overlap(a, a) == 1.0);
  CHECK(lag1_box_overlap(a, b) == doctest::Approx(0.25));
  CHECK(lag1_box_overlap(a, std::vector<double>{5, 6, 5, 6}) == 0.0);
}

TEST_CASE("SVG output is deterministic and rejects empty input") {
  ScatterPlot p{"t", "x", "y", {0.0, 1.0, 0.5}, {1.0, 0.0, 0.25}, {0, 1, 2}};
  auto a = scatter_svg(p), b = scatter_svg(p);
  CHECK(a == b);
  CHECK(a.rfind("<svg", 0) == 0);
  CHECK(a.find("</svg>") != std::string::npos);
  CHECK_THROWS_AS(scatter_svg(ScatterPlot{"t", "x", "y", {}, {}, {}}), Error);
  CHECK_THROWS_AS(scatter_svg(ScatterPlot{"t", "x", "y", {NAN}, {0.0}, {0}}), Error);
}

TEST_CASE("logistic pipeline end to end") {
  TempDir tmp("logistic");
  auto art = run_pipeline(small_logistic(tmp.path));
  for (const char* f : {run_files::kConfig, run_files::kTruthTrajectory, run_files::kObservations, run_files::kLabels,
                        run_files::kRecoveredChain, run_files::kModel, run_files::kEvaluation, run_files::kPlotLag1,
                        run_files::kPlotDelay, run_files::kPlotTruth, run_files::kPlotResim, run_files::kManifest})
    CHECK(fs::exists(tmp.path / f));
  auto r = evaluate_run(art);
  CHECK(r.clusters == 3);
  CHECK(r.recovered_symbols == 3);
  CHECK(r.purity >= 0.99);
  CHECK(r.p_error <= 0.05);
  CHECK(r.mse <= 1e-3);

  // a second run into the same directory replaces it with identical content
  const std::string manifest = slurp(tmp.path / run_files::kManifest);
  run_pipeline(small_logistic(tmp.path));
  CHECK(slurp(tmp.path / run_files::kManifest) == manifest);
}

TEST_CASE("learning stages never read the ground truth") {
  TempDir a("iso_a"), b("iso_b");
  auto ca = small_logistic(a.path), cb = small_logistic(b.path);
  run_pipeline(ca);
  fs::create_directories(b.path);
  {
    std::ofstream os(b.path / run_files::kConfig);
    write_config(os, cb);
  }
  stage_simulate(cb, b.path);
  fs::remove_all(b.path / "truth");
  stage_embed(cb, b.path);
  stage_cluster(cb, b.path);
  stage_unembed(cb, b.path);
  stage_fit(cb, b.path);
  for (const char* f : {run_files::kDelay, run_files::kDelayVectors, run_files::kClusterReport, run_files::kLabels,
                        run_files::kGz, run_files::kGx, run_files::kPhi, run_files::kUnembedLog,
                        run_files::kRecoveredChain, run_files::kDriving, run_files::kModel, run_files::kFitReport,
                        run_files::kResimulated}) {
    INFO(f);
    CHECK(slurp(a.path / f) == slurp(b.path / f));
  }
  CHECK_THROWS_AS(evaluate_run(RunArtifacts{b.path, {}}), Error);
}

TEST_CASE("failures name the stage") {
  TempDir tmp("stage_err");
  auto cfg = small_logistic(tmp.path);
  cfg.length = 50;
  try {
    run_pipeline(cfg);
    FAIL("expected a stage failure");
  } catch (const StageError& e) {
    CHECK(e.stage() == "cluster");
    CHECK(std::string(e.what()).rfind("cluster: ", 0) == 0);
  }
}

TEST_CASE("a non-run directory is never cleared") {
  TempDir tmp("foreign");
  fs::create_directories(tmp.path);
  { std::ofstream(tmp.path / "keep.txt") << "data"; }
  CHECK_THROWS_AS(run_pipeline(small_logistic(tmp.path)), Error);
  CHECK(fs::exists(tmp.path / "keep.txt"));
}
