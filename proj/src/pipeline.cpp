#include "rifs/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "rifs/cluster.hpp"
#include "rifs/delay.hpp"
#include "rifs/delay_search.hpp"
#include "rifs/hdi.hpp"
#include "rifs/ifs.hpp"
#include "rifs/io.hpp"
#include "rifs/plot.hpp"

namespace fs = std::filesystem;

namespace rifs {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t resim_seed(std::uint64_t seed) { return splitmix(seed ^ 0x5EEDull); }

std::uint64_t need_seed(const PipelineConfig& cfg) {
  if (!cfg.seed) fail(ErrorCode::Config, "a seed is required");
  return *cfg.seed;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) fail(ErrorCode::Io, "cannot read " + p.string());
  return in;
}

template <class Fn>
void write_with(const fs::path& p, Fn&& fn) {
  std::ostringstream os;
  fn(os);
  write_file(p, os.str());
}

GeneratorSet generators(const PipelineConfig& cfg) {
  if (cfg.spec.empty()) return builtin_generators(cfg.system);
  auto in = open_in(cfg.spec);
  return parse_generator_spec(in, fs::path(cfg.spec).stem().string());
}

ObservationSeries read_observations(const fs::path& dir) {
  auto in = open_in(dir / run_files::kObservations);
  return read_observation_csv(in);
}

int read_delay_length(const fs::path& dir) {
  auto in = open_in(dir / run_files::kDelay);
  std::string key;
  int l = 0;
  if (!(in >> key >> l) || key != "l" || l < 2) fail(ErrorCode::Io, "delay.txt: expected 'l <value>' with l >= 2");
  return l;
}

int read_symbol_count(const fs::path& dir) {
  auto in = open_in(dir / run_files::kUnembedLog);
  std::string key;
  int k = 0;
  if (!(in >> key >> k) || key != "symbols" || k < 1) fail(ErrorCode::Io, "unembed.txt: expected 'symbols <count>'");
  return k;
}

std::vector<double> first_channel(const ObservationSeries& obs) {
  std::vector<double> z(obs.size());
  for (std::size_t n = 0; n < z.size(); ++n) z[n] = obs.values[n * static_cast<std::size_t>(obs.channels)];
  return z;
}

double read_report_value(const fs::path& p, const std::string& key) {
  auto in = open_in(p);
  std::string k, v;
  while (in >> k) {
    std::getline(in, v);
    if (k == key) return parse_double(v.substr(v.find_first_not_of(' ')));
  }
  fail(ErrorCode::Io, p.filename().string() + ": no '" + key + "' entry");
}

template <class Fn>
void run_stage(const std::string& name, Fn&& fn) {
  try {
    fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  } catch (const std::exception& e) {
    throw StageError(name, Error(ErrorCode::Numerical, e.what()));
  }
}

void prepare_run_dir(const fs::path& dir) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) fail(ErrorCode::Config, dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir)) {
      if (!fs::exists(dir / run_files::kConfig))
        fail(ErrorCode::Config, dir.string() + " is not empty and does not look like a run directory");
      for (const auto& e : fs::directory_iterator(dir)) fs::remove_all(e.path());
    }
  }
  fs::create_directories(dir);
}

}  // namespace

void stage_simulate(const PipelineConfig& cfg, const fs::path& dir) {
  const std::uint64_t seed = need_seed(cfg);
  GeneratorSet gs = generators(cfg);
  TransitionMatrix P = TransitionMatrix::uniform(gs.k());
  if (!cfg.chain.empty()) {
    auto in = open_in(cfg.chain);
    P = read_matrix(in);
    if (P.k() != gs.k())
      fail(ErrorCode::InvalidArgument, "chain has " + std::to_string(P.k()) + " states but the system has " +
                                           std::to_string(gs.k()) + " generators");
  }
  std::vector<double> x0 = cfg.x0.empty() ? std::vector<double>(static_cast<std::size_t>(gs.dim), 0.0) : cfg.x0;
  if (x0.size() != static_cast<std::size_t>(gs.dim))
    fail(ErrorCode::InvalidArgument, "x0 has " + std::to_string(x0.size()) + " entries, system dimension is " +
                                         std::to_string(gs.dim));
  SymbolSequence driving = sample_chain(P, cfg.length + cfg.burn_in - 1, seed);
  Trajectory traj = simulate(gs, driving, x0, cfg.burn_in);
  ObservationSeries obs = observe(traj, Observable::parse(cfg.observable));

  fs::create_directories(dir / "truth");
  write_with(dir / run_files::kTruthTrajectory, [&](std::ostream& os) { write_trajectory_csv(os, traj, true); });
  write_with(dir / run_files::kTruthChain, [&](std::ostream& os) { write_matrix(os, P); });
  write_with(dir / run_files::kObservations, [&](std::ostream& os) { write_observation_csv(os, obs); });
}

void stage_embed(const PipelineConfig& cfg, const fs::path& dir) {
  ObservationSeries obs = read_observations(dir);
  std::ostringstream log;
  int l = cfg.l;
  if (l == 0) {
    DelaySearchResult r = search_delay(obs, cfg.l_max, cfg.quality, cfg.cluster);
    if (!r.l) fail(ErrorCode::Numerical, "no delay length up to " + std::to_string(cfg.l_max) + " qualifies");
    l = *r.l;
    for (const auto& c : r.candidates) {
      log << "candidate " << c.l << " clusters " << c.clusters << " intrinsic_dim " << c.intrinsic_dim
          << " coverage " << fmt(c.coverage) << " separation " << fmt(c.separation) << " residual "
          << fmt(c.residual) << " qualifies " << (c.qualifies ? 1 : 0);
      if (!c.clustered) log << " error " << c.error;
      log << '\n';
    }
  }
  DelayVectorSet dvs = embed(obs, l);
  write_with(dir / run_files::kDelay, [&](std::ostream& os) { os << "l " << l << '\n' << log.str(); });
  write_with(dir / run_files::kDelayVectors, [&](std::ostream& os) { write_delay_csv(os, dvs); });
}

void stage_cluster(const PipelineConfig& cfg, const fs::path& dir) {
  ObservationSeries obs = read_observations(dir);
  const int l = read_delay_length(dir);
  auto in = open_in(dir / run_files::kDelayVectors);
  DelayVectorSet dvs = read_delay_csv(in, obs.channels);
  if (dvs.l != l) fail(ErrorCode::Io, "delay_vectors.csv does not match delay.txt");
  ClusterModel cm = cluster(dvs, cfg.cluster);
  if (cm.num_clusters == 0) fail(ErrorCode::Numerical, "no clusters found");
  dvs.labels = cm.assignments;
  write_with(dir / run_files::kDelayVectors, [&](std::ostream& os) { write_delay_csv(os, dvs); });
  write_with(dir / run_files::kClusterReport, [&](std::ostream& os) { os << cluster_report(cm); });
  write_with(dir / run_files::kLabels, [&](std::ostream& os) { write_sequence(os, label_sequence(cm, dvs)); });
}

void stage_unembed(const PipelineConfig& cfg, const fs::path& dir) {
  const int l = read_delay_length(dir);
  const int m = l - 1;
  auto in = open_in(dir / run_files::kLabels);
  SymbolSequence labels = read_sequence(in);
  std::vector<std::string> dropped;
  WeightedDigraph gz = prune_rare_edges(transition_graph(labels), cfg.min_edge_fraction, &dropped);
  UnembedResult r = unembed(gz, m);
  TransitionMatrix P = to_matrix(r.gx);

  const std::size_t steps = read_observations(dir).size() - 1;
  SymbolSequence omega = derive_driving(labels.symbols, r.phi, r.symbols, steps);

  write_with(dir / run_files::kGz, [&](std::ostream& os) { write_graph(os, gz); });
  write_with(dir / run_files::kGx, [&](std::ostream& os) { write_graph(os, r.gx); });
  write_with(dir / run_files::kPhi, [&](std::ostream& os) { write_tuples(os, r.phi); });
  write_with(dir / run_files::kRecoveredChain, [&](std::ostream& os) { write_matrix(os, P); });
  write_with(dir / run_files::kDriving, [&](std::ostream& os) { write_sequence(os, omega); });
  write_with(dir / run_files::kUnembedLog, [&](std::ostream& os) {
    os << "symbols " << r.symbols << "\nm " << m << "\ncircuits_used " << r.circuits_used << '\n';
    for (const auto& d : dropped) os << "dropped " << d << '\n';
    for (const auto& w : r.warnings) os << "warning " << w << '\n';
  });
}

void stage_fit(const PipelineConfig& cfg, const fs::path& dir) {
  const std::uint64_t seed = need_seed(cfg);
  ObservationSeries obs = read_observations(dir);
  if (obs.channels != 1) fail(ErrorCode::InvalidArgument, "fitting needs a scalar observable");
  const int k = read_symbol_count(dir);
  auto in = open_in(dir / run_files::kDriving);
  SymbolSequence omega = read_sequence(in, k);
  std::vector<double> z = first_channel(obs);
  if (omega.size() + 1 != z.size()) fail(ErrorCode::Io, "omega.txt does not match the observation count");

  auto [a, b] = longest_known_run(omega);
  if (b - a < 50) fail(ErrorCode::Numerical, "longest stretch with known symbols is only " + std::to_string(b - a) + " steps");
  std::vector<double> zw(z.begin() + static_cast<std::ptrdiff_t>(a), z.begin() + static_cast<std::ptrdiff_t>(b) + 1);
  SymbolSequence ow{k, std::vector<int>(omega.symbols.begin() + static_cast<std::ptrdiff_t>(a),
                                        omega.symbols.begin() + static_cast<std::ptrdiff_t>(b))};
  int V = cfg.hidden;
  if (V < 0) V = std::max(0, static_cast<int>(read_report_value(dir / run_files::kClusterReport, "intrinsic_dim")) - 1);
  FitResult fr = fit_hdi(zw, ow, k, V, cfg.degree, cfg.fit, seed);

  // Free run of the learnt system under a fresh sample of the recovered chain.
  auto pin = open_in(dir / run_files::kRecoveredChain);
  TransitionMatrix P = read_matrix(pin);
  SymbolSequence drive = sample_chain(P, z.size() - 1, resim_seed(seed));
  std::vector<double> sim = resimulate(fr.model, zw.front(), fr.model.h0, drive);
  ObservationSeries so{1, sim, "resimulated"};

  write_with(dir / run_files::kModel, [&](std::ostream& os) { write_model(os, fr.model); });
  write_with(dir / run_files::kFitReport, [&](std::ostream& os) {
    os << "fit_window " << a << ' ' << b << '\n';
    write_fit_report(os, fr.report);
  });
  write_with(dir / run_files::kResimulated, [&](std::ostream& os) { write_observation_csv(os, so, &drive); });
}

SymbolSequence derive_driving(const std::vector<int>& labels, const TupleAssignment& phi, int symbols,
                              std::size_t num_steps) {
  const std::size_t K = static_cast<std::size_t>(symbols) + 1;
  std::vector<int> votes(num_steps * K, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = phi.tuples.find(labels[i]);
    if (labels[i] <= 0 || it == phi.tuples.end()) continue;
    for (std::size_t j = 0; j < it->second.size(); ++j) {
      int s = it->second[j];
      if (i + j >= num_steps || s < 1 || s > symbols) continue;
      ++votes[(i + j) * K + static_cast<std::size_t>(s)];
    }
  }
  SymbolSequence out{symbols, std::vector<int>(num_steps, kGap)};
  for (std::size_t n = 0; n < num_steps; ++n) {
    int best = kGap, top = 0;
    bool tie = false;
    for (std::size_t s = 1; s < K; ++s) {
      int v = votes[n * K + s];
      if (v > top) {
        top = v, best = static_cast<int>(s), tie = false;
      } else if (v == top && v > 0) {
        tie = true;
      }
    }
    out.symbols[n] = tie ? kGap : best;
  }
  return out;
}

std::pair<std::size_t, std::size_t> longest_known_run(const SymbolSequence& omega) {
  std::size_t best_a = 0, best_b = 0, a = 0;
  for (std::size_t n = 0; n <= omega.size(); ++n) {
    if (n == omega.size() || omega[n] == kGap) {
      if (n - a > best_b - best_a) best_a = a, best_b = n;
      a = n + 1;
    }
  }
  return {best_a, best_b};
}

double matrix_error_up_to_permutation(const TransitionMatrix& a, const TransitionMatrix& b) {
  if (a.k() != b.k()) return std::numeric_limits<double>::infinity();
  const int k = a.k();
  if (k > 8) fail(ErrorCode::InvalidArgument, "matrix comparison up to permutation supports at most 8 states");
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double e = 0.0;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) e = std::max(e, std::abs(a(perm[i], perm[j]) - b(i, j)));
    best = std::min(best, e);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double lag1_box_overlap(const std::vector<double>& a, const std::vector<double>& b) {
  struct Box {
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  };
  auto box = [](const std::vector<double>& z) {
    Box r;
    for (std::size_t n = 0; n + 1 < z.size(); ++n) {
      r.x0 = std::min(r.x0, z[n]), r.x1 = std::max(r.x1, z[n]);
      r.y0 = std::min(r.y0, z[n + 1]), r.y1 = std::max(r.y1, z[n + 1]);
    }
    return r;
  };
  if (a.size() < 2 || b.size() < 2) fail(ErrorCode::InvalidArgument, "box overlap needs at least two values per series");
  Box p = box(a), q = box(b);
  auto area = [](const Box& r) { return std::max(0.0, r.x1 - r.x0) * std::max(0.0, r.y1 - r.y0); };
  Box i{std::max(p.x0, q.x0), std::min(p.x1, q.x1), std::max(p.y0, q.y0), std::min(p.y1, q.y1)};
  double inter = area(i), uni = area(p) + area(q) - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

EvaluationReport evaluate_run(const RunArtifacts& art) {
  const fs::path truth = art.path(run_files::kTruthTrajectory);
  if (!fs::exists(truth) || !fs::exists(art.path(run_files::kTruthChain)))
    fail(ErrorCode::Io, "ground truth missing under " + (art.dir / "truth").string());
  EvaluationReport r;

  auto pin = open_in(art.path(run_files::kTruthChain));
  TransitionMatrix Ptrue = read_matrix(pin);
  auto tin = open_in(truth);
  SymbolSequence driving = read_omega_column(tin, Ptrue.k());
  r.true_symbols = Ptrue.k();

  ObservationSeries obs = read_observations(art.dir);
  const int l = read_delay_length(art.dir);
  auto din = open_in(art.path(run_files::kDelayVectors));
  DelayVectorSet dvs = read_delay_csv(din, obs.channels);
  std::vector<int> labels(dvs.size()), words(dvs.size());
  for (std::size_t i = 0; i < dvs.size(); ++i) {
    labels[i] = std::max(dvs.labels[i], 0);
    r.clusters = std::max(r.clusters, labels[i]);
    int w = 0;
    for (int j = 0; j + 1 < l; ++j) w = w * Ptrue.k() + driving[i + static_cast<std::size_t>(j)] - 1;
    words[i] = w + 1;
  }
  r.purity = label_purity(labels, words);

  auto rin = open_in(art.path(run_files::kRecoveredChain));
  TransitionMatrix Prec = read_matrix(rin);
  r.recovered_symbols = Prec.k();
  r.p_error = matrix_error_up_to_permutation(Prec, Ptrue);

  r.mse = read_report_value(art.path(run_files::kFitReport), "mse");
  auto sin = open_in(art.path(run_files::kResimulated));
  r.box_overlap = lag1_box_overlap(first_channel(obs), first_channel(read_observation_csv(sin)));
  return r;
}

void write_evaluation(std::ostream& os, const EvaluationReport& r) {
  os << "purity " << fmt(r.purity) << '\n'
     << "clusters " << r.clusters << '\n'
     << "true_symbols " << r.true_symbols << '\n'
     << "recovered_symbols " << r.recovered_symbols << '\n'
     << "p_error " << fmt(r.p_error) << '\n'
     << "mse " << fmt(r.mse) << '\n'
     << "box_overlap " << fmt(r.box_overlap) << '\n';
}

void emit_plots(const RunArtifacts& art) {
  ObservationSeries obs = read_observations(art.dir);
  auto din = open_in(art.path(run_files::kDelayVectors));
  DelayVectorSet dvs = read_delay_csv(din, obs.channels);
  auto sin = open_in(art.path(run_files::kResimulated));
  ObservationSeries sim = read_observation_csv(sin);
  if (dvs.size() == 0 || obs.size() < 2 || sim.size() < 2) fail(ErrorCode::Io, "plot: empty input");

  const std::size_t c = static_cast<std::size_t>(obs.channels);
  ScatterPlot lag1{"Lag-1 plane by cluster", "z(n)", "z(n+1)", {}, {}, {}};
  ScatterPlot delay{"Delay space by cluster", "", "", {}, {}, {}};
  for (std::size_t i = 0; i < dvs.size(); ++i) {
    auto v = dvs.vec(i);
    int g = std::max(dvs.labels[i], 0);
    lag1.x.push_back(v[0]), lag1.y.push_back(v[c]), lag1.group.push_back(g);
    auto [px, py] = oblique_projection(v[0], v[c], dvs.l >= 3 ? v[2 * c] : 0.0);
    delay.x.push_back(px), delay.y.push_back(py), delay.group.push_back(g);
  }
  auto attractor = [](const std::string& title, const std::vector<double>& z) {
    ScatterPlot p{title, "z(n)", "z(n+1)", {}, {}, {}};
    for (std::size_t n = 0; n + 1 < z.size(); ++n) p.x.push_back(z[n]), p.y.push_back(z[n + 1]), p.group.push_back(1);
    return p;
  };
  fs::create_directories(art.dir / "plots");
  write_file(art.path(run_files::kPlotLag1), scatter_svg(lag1));
  write_file(art.path(run_files::kPlotDelay), scatter_svg(delay));
  write_file(art.path(run_files::kPlotTruth), scatter_svg(attractor("Observed series", first_channel(obs))));
  write_file(art.path(run_files::kPlotResim), scatter_svg(attractor("Resimulated learnt model", first_channel(sim))));
}

RunArtifacts collect_artifacts(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorCode::Io, dir.string() + " is not a directory");
  RunArtifacts a{dir, {}};
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string rel = fs::relative(e.path(), dir).generic_string();
    if (rel != run_files::kManifest) a.files.push_back(rel);
  }
  std::sort(a.files.begin(), a.files.end());
  return a;
}

void write_manifest(const RunArtifacts& art) {
  std::string out;
  for (const auto& f : art.files) out += sha256_hex(read_file(art.path(f))) + "  " + f + '\n';
  write_file(art.path(run_files::kManifest), out);
}

RunArtifacts run_pipeline(const PipelineConfig& cfg) {
  run_stage("config", [&] { validate(cfg, true); });
  const fs::path dir = cfg.output_dir;
  run_stage("setup", [&] {
    prepare_run_dir(dir);
    write_with(dir / run_files::kConfig, [&](std::ostream& os) { write_config(os, cfg); });
  });
  run_stage("simulate", [&] { stage_simulate(cfg, dir); });
  run_stage("embed", [&] { stage_embed(cfg, dir); });
  run_stage("cluster", [&] { stage_cluster(cfg, dir); });
  run_stage("unembed", [&] { stage_unembed(cfg, dir); });
  run_stage("fit", [&] { stage_fit(cfg, dir); });
  RunArtifacts art{dir, {}};
  run_stage("evaluate", [&] {
    EvaluationReport r = evaluate_run(art);
    write_with(dir / run_files::kEvaluation, [&](std::ostream& os) { write_evaluation(os, r); });
  });
  run_stage("plot", [&] { emit_plots(art); });
  run_stage("manifest", [&] {
    art = collect_artifacts(dir);
    write_manifest(art);
  });
  return art;
}

}  // namespace rifs
