#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rifs/config.hpp"
#include "rifs/error.hpp"
#include "rifs/tdemc.hpp"

namespace rifs {

// Failure inside one pipeline stage; what() is "<stage>: <message>".
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.code(), stage + ": " + cause.what()), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// Files of a run directory, relative to it. Ground truth lives under truth/
// and no learning stage reads from there.
namespace run_files {
inline constexpr const char* kConfig = "config.ini";
inline constexpr const char* kTruthTrajectory = "truth/trajectory.csv";
inline constexpr const char* kTruthChain = "truth/P.txt";
inline constexpr const char* kObservations = "observations.csv";
inline constexpr const char* kDelay = "delay.txt";  // chosen l and search log
inline constexpr const char* kDelayVectors = "delay_vectors.csv";
inline constexpr const char* kClusterReport = "cluster_report.txt";
inline constexpr const char* kLabels = "labels.txt";
inline constexpr const char* kGz = "gz.txt";
inline constexpr const char* kGx = "gx.txt";
inline constexpr const char* kPhi = "phi.txt";
inline constexpr const char* kUnembedLog = "unembed.txt";
inline constexpr const char* kRecoveredChain = "P.txt";
inline constexpr const char* kDriving = "omega.txt";  // recovered driving sequence, 0 = unknown
inline constexpr const char* kModel = "model.txt";
inline constexpr const char* kFitReport = "fit_report.txt";
inline constexpr const char* kResimulated = "resimulated.csv";
inline constexpr const char* kEvaluation = "evaluation.txt";
inline constexpr const char* kPlotLag1 = "plots/lag1.svg";
inline constexpr const char* kPlotDelay = "plots/delay.svg";
inline constexpr const char* kPlotTruth = "plots/truth_attractor.svg";
inline constexpr const char* kPlotResim = "plots/resimulated_attractor.svg";
inline constexpr const char* kManifest = "manifest.txt";
}  // namespace run_files

struct RunArtifacts {
  std::filesystem::path dir;
  std::vector<std::string> files;  // relative paths, sorted; manifest excluded

  std::filesystem::path path(const std::string& rel) const { return dir / rel; }
};

// Stages. Each reads its inputs from the run directory and writes its
// outputs there, so any of them can be re-run on its own.
void stage_simulate(const PipelineConfig& cfg, const std::filesystem::path& dir);
void stage_embed(const PipelineConfig& cfg, const std::filesystem::path& dir);
void stage_cluster(const PipelineConfig& cfg, const std::filesystem::path& dir);
void stage_unembed(const PipelineConfig& cfg, const std::filesystem::path& dir);
void stage_fit(const PipelineConfig& cfg, const std::filesystem::path& dir);

// simulate, embed, cluster, unembed, fit, evaluate, plot, manifest. Errors
// surface as StageError naming the stage.
RunArtifacts run_pipeline(const PipelineConfig& cfg);

// Symbol at step n from every labeled delay vector covering it: vector i
// with label c votes phi(c)[j] for step i + j. Steps with no vote or a tied
// vote stay kGap. Result has num_steps entries over the phi alphabet.
SymbolSequence derive_driving(const std::vector<int>& labels, const TupleAssignment& phi, int symbols,
                              std::size_t num_steps);

// Longest run [begin, end) of steps without a gap.
std::pair<std::size_t, std::size_t> longest_known_run(const SymbolSequence& omega);

// Smallest max-entry difference over relabelings of a's states.
double matrix_error_up_to_permutation(const TransitionMatrix& a, const TransitionMatrix& b);

// Axis-aligned bounding boxes of the lag-1 clouds (z_n, z_{n+1}) of the first
// channel: intersection area over union area.
double lag1_box_overlap(const std::vector<double>& a, const std::vector<double>& b);

struct EvaluationReport {
  double purity = 0.0;  // delay-vector labels against ground-truth words
  int true_symbols = 0;
  int recovered_symbols = 0;
  int clusters = 0;
  double p_error = 0.0;  // infinite when the alphabets differ
  double mse = 0.0;
  double box_overlap = 0.0;
};

// Compares a finished run with its ground truth. Throws when truth/ is missing.
EvaluationReport evaluate_run(const RunArtifacts& artifacts);
void write_evaluation(std::ostream& os, const EvaluationReport& r);

// SVG plots of a run: lag-1 plane and delay space coloured by cluster,
// ground-truth and resimulated attractors.
void emit_plots(const RunArtifacts& artifacts);

// Lists every file under dir except the manifest, sorted.
RunArtifacts collect_artifacts(const std::filesystem::path& dir);
// "<sha256>  <path>" per file.
void write_manifest(const RunArtifacts& artifacts);

}  // namespace rifs
