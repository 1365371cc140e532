// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Usage: rifs_acceptance [scratch dir]

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <unistd.h>

#include "oracles.hpp"
#include "rifs/error.hpp"
#include "rifs/hdi.hpp"
#include "rifs/pipeline.hpp"
#include "rifs/tdemc.hpp"

using namespace rifs;
namespace fs = std::filesystem;

namespace {

int failures = 0;

struct Outcome {
  bool ok = true;
  std::string detail;
};

void report(const std::string& name, const std::function<Outcome()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.ok) ++failures;
  std::printf("%s %s: %s [%.1f s]\n", o.ok ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<int> cluster_dims(const fs::path& dir) {
  std::ifstream in(dir / run_files::kClusterReport);
  std::vector<int> dims;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag, size_tag, dim_tag;
    int id = 0, dim = 0;
    long size = 0;
    if (ls >> tag >> id >> size_tag >> size >> dim_tag >> dim && tag == "cluster" && dim_tag == "dim") dims.push_back(dim);
  }
  return dims;
}

int chosen_l(const fs::path& dir) {
  std::ifstream in(dir / run_files::kDelay);
  std::string tag;
  int l = 0;
  in >> tag >> l;
  return tag == "l" ? l : 0;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

struct PresetRun {
  EvaluationReport eval;
  std::vector<int> dims;
  int l = 0;
  double seconds = 0.0;
  std::string manifest;
};

PresetRun run_preset(const std::string& name, const fs::path& dir) {
  auto cfg = preset_config(name);
  cfg.seed = 1;
  cfg.output_dir = dir;
  const auto t0 = std::chrono::steady_clock::now();
  auto art = run_pipeline(cfg);
  PresetRun r;
  r.seconds = seconds_since(t0);
  r.eval = evaluate_run(art);
  r.dims = cluster_dims(dir);
  r.l = chosen_l(dir);
  r.manifest = slurp(dir / run_files::kManifest);
  return r;
}

std::string summary(const PresetRun& r) {
  std::string dims;
  for (int d : r.dims) dims += std::to_string(d);
  return "l=" + std::to_string(r.l) + " clusters=" + std::to_string(r.eval.clusters) + " dims=" + dims +
         " symbols=" + std::to_string(r.eval.recovered_symbols) + "/" + std::to_string(r.eval.true_symbols) +
         " purity=" + fmt(r.eval.purity) + " P_err=" + fmt(r.eval.p_error) + " mse=" + fmt(r.eval.mse) +
         " time=" + fmt(r.seconds) + "s";
}

bool all_equal(const std::vector<int>& v, int x) {
  return !v.empty() && std::all_of(v.begin(), v.end(), [x](int d) { return d == x; });
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path scratch =
      (argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path()) / ("rifs_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  report("tdemc round trip", [] {
    Rng rng(2024);
    const auto t0 = std::chrono::steady_clock::now();
    int n = 0;
    std::string first_error;
    for (int rep = 0; rep < 20; ++rep)
      for (int k = 2; k <= 5; ++k)
        for (int m = 2; m <= 4; ++m) {
          auto P = oracle::random_irreducible(k, rng);
          auto e = embed_mc(P, m);
          auto r = unembed(e.graph, m);
          auto err = oracle::check_round_trip(P, e, r, 1e-12);
          if (!err.empty() && first_error.empty())
            first_error = "k=" + std::to_string(k) + " m=" + std::to_string(m) + ": " + err;
          ++n;
        }
    const double secs = seconds_since(t0);
    Outcome o{first_error.empty() && n >= 200 && secs < 60.0,
              std::to_string(n) + " chains, " + fmt(secs) + " s (limit 60 s)"};
    if (!first_error.empty()) o.detail += "; " + first_error;
    return o;
  });

  report("four-node worked example", [] {
    WeightedDigraph g;
    for (auto [u, v] : std::vector<std::pair<int, int>>{{1, 1}, {1, 2}, {2, 3}, {2, 4}, {3, 1}, {3, 2}, {4, 3}, {4, 4}})
      g.set_edge(u, v, 0.5);
    auto r = unembed(g, 2);
    // Up to a permutation of the two symbols.
    const std::map<int, std::vector<int>> want{{1, {1, 1}}, {2, {1, 2}}, {3, {2, 1}}, {4, {2, 2}}};
    auto swapped = want;
    for (auto& [node, t] : swapped)
      for (int& s : t) s = 3 - s;
    const bool phi_ok = r.phi.tuples == want || r.phi.tuples == swapped;
    bool gx_ok = r.symbols == 2 && r.gx.weights.size() == 4;
    for (const auto& [e, w] : r.gx.weights) gx_ok = gx_ok && w == 0.5;
    return Outcome{phi_ok && gx_ok, "phi " + std::string(phi_ok ? "matches" : "differs") + ", G_X " +
                                        (gx_ok ? "is the full 2-state graph" : "differs")};
  });

  report("circuit enumeration", [] {
    WeightedDigraph g;
    for (auto [u, v] : std::vector<std::pair<int, int>>{{1, 1}, {1, 2}, {2, 3}, {2, 4}, {3, 1}, {3, 2}, {4, 3}, {4, 4}})
      g.set_edge(u, v, 0.5);
    std::vector<std::vector<int>> got;
    for (const auto& c : elementary_circuits(g)) got.push_back(c.nodes);
    const std::vector<std::vector<int>> want{{1}, {4}, {2, 3}, {1, 2, 3}, {2, 4, 3}, {1, 2, 4, 3}};
    Rng rng(7);
    int mismatches = 0;
    const int trials = 500;
    for (int t = 0; t < trials; ++t) {
      auto d = oracle::random_digraph(1 + t % 5, 0.15 + 0.6 * rng.uniform(), rng);
      std::set<std::vector<int>> s;
      for (const auto& c : elementary_circuits(d)) s.insert(c.nodes);
      mismatches += s != oracle::simple_cycles(d);
    }
    return Outcome{got == want && mismatches == 0, std::string("six circuits ") + (got == want ? "exact" : "differ") +
                                                       ", random digraphs " + std::to_string(trials - mismatches) +
                                                       "/" + std::to_string(trials) + " match"};
  });

  report("delay graph properties", [] {
    Rng rng(11);
    int irr = 0, irr_bad = 0, cnt = 0, cnt_bad = 0, proj = 0, proj_bad = 0, dist = 0, dist_bad = 0;
    for (int t = 0; t < 200; ++t) {
      const int k = 1 + t % 4, m = 1 + (t / 4) % 3;
      auto P = oracle::random_on_pattern(oracle::random_pattern(k, 0.2 + 0.5 * rng.uniform(), false, rng), rng);
      ++irr;
      irr_bad += is_irreducible(P) != oracle::strongly_connected(oracle::word_graph(P, m).adj);
    }
    // sizes whose delay graphs have few enough circuits to enumerate
    const std::pair<int, int> sizes[] = {{1, 2}, {1, 4}, {2, 2}, {2, 3}, {2, 4}, {3, 2}};
    for (int t = 0; t < 150; ++t) {
      const auto [k, m] = sizes[t % 6];
      auto P = oracle::random_irreducible(k, rng);
      auto e = embed_mc(P, m);
      auto cs = elementary_circuits(e.graph);
      ++cnt;
      cnt_bad += cs.size() < elementary_circuits(from_matrix(P)).size();
      ++proj;
      bool ok = !cs.empty();
      for (const auto& c : cs)
        for (std::size_t i = 0; i < c.size(); ++i)
          ok = ok && P(e.phi.tuples.at(c.nodes[i])[0] - 1, e.phi.tuples.at(c.nodes[(i + 1) % c.size()])[0] - 1) > 0.0;
      proj_bad += !ok;
    }
    for (int t = 0; dist < 150 && t < 2000; ++t) {
      const int k = 3 + t % 3, m = 2 + t % 2;
      auto P = oracle::random_irreducible(k, rng);
      auto cycles = oracle::simple_cycles(from_matrix(P));
      std::vector<std::vector<int>> cl(cycles.begin(), cycles.end());
      auto wg = oracle::word_graph(P, m);
      auto e = embed_mc(P, m);
      auto walk = [&](const std::vector<int>& cyc) {
        std::vector<int> out;
        for (std::size_t i = 0; i < cyc.size(); ++i) {
          std::vector<int> w;
          for (int j = 0; j < m; ++j) w.push_back(cyc[(i + static_cast<std::size_t>(j)) % cyc.size()]);
          out.push_back(wg.id.at(w));
        }
        return out;
      };
      for (std::size_t i = 0; i < cl.size(); ++i)
        for (std::size_t j = 0; j < cl.size(); ++j) {
          if (i == j) continue;
          bool disjoint = std::none_of(cl[i].begin(), cl[i].end(), [&](int v) {
            return std::find(cl[j].begin(), cl[j].end(), v) != cl[j].end();
          });
          if (!disjoint) continue;
          ++dist;
          dist_bad += directed_distance(e.graph, walk(cl[i]), walk(cl[j])) < m;
        }
    }
    auto part = [](const char* name, int n, int bad) {
      return std::string(name) + " " + std::to_string(n - bad) + "/" + std::to_string(n);
    };
    const bool ok = irr >= 100 && cnt >= 100 && proj >= 100 && dist >= 100 && !irr_bad && !cnt_bad && !proj_bad && !dist_bad;
    return Outcome{ok, part("irreducibility", irr, irr_bad) + ", " + part("circuit count", cnt, cnt_bad) + ", " +
                           part("projection", proj, proj_bad) + ", " + part("distance", dist, dist_bad)};
  });

  report("gradient verification", [] {
    Rng rng(31);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      const int k = 1 + t % 3, V = t % 3, degree = 1 + (t / 3) % 3;
      auto m = make_hdi_model(k, V, degree);
      for (double& c : m.coef) c = 0.15 * rng.normal();
      for (double& h : m.h0) h = 0.3 * rng.normal();
      std::vector<double> z(40);
      for (double& x : z) x = rng.uniform() - 0.5;
      SymbolSequence om{k, {}};
      for (int n = 0; n < 39; ++n) om.symbols.push_back(1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(k))));
      worst = std::max(worst, oracle::gradient_error(m, z, om, loss_and_gradient(m, z, om)));
    }
    return Outcome{worst <= 1e-5, "50 instances, max relative error " + fmt(worst) + " (limit 1e-5)"};
  });

  std::map<std::string, PresetRun> first;
  report("logistic family", [&] {
    auto r = first["logistic3"] = run_preset("logistic3", scratch / "logistic3_a");
    return Outcome{r.eval.purity >= 0.99 && r.eval.p_error <= 0.05, summary(r) + " (need purity >= 0.99, P_err <= 0.05)"};
  });
  report("Henon pipeline", [&] {
    auto r = first["henon"] = run_preset("henon", scratch / "henon_a");
    const bool ok = r.l == 3 && r.eval.clusters == 4 && all_equal(r.dims, 2) && r.eval.recovered_symbols == 2 &&
                    r.eval.mse <= 1e-3 && r.seconds < 300.0;
    return Outcome{ok, summary(r) + " (need l=3, 4 clusters of dim 2, 2 symbols, mse <= 1e-3, < 300 s)"};
  });
  report("Sierpinski pipeline", [&] {
    auto r = first["sierpinski"] = run_preset("sierpinski", scratch / "sierpinski_a");
    const bool ok = r.l == 3 && r.eval.clusters == 9 && r.eval.recovered_symbols == 3 && r.eval.p_error <= 0.05 &&
                    r.eval.mse <= 1e-3 && r.seconds < 300.0;
    return Outcome{ok, summary(r) + " (need l=3, 9 clusters, 3 symbols, P_err <= 0.05, mse <= 1e-3, < 300 s)"};
  });
  report("determinism", [&] {
    std::string detail;
    bool ok = true;
    for (const char* name : {"logistic3", "henon", "sierpinski"}) {
      if (!first.count(name)) {
        ok = false;
        detail += std::string(name) + " first run missing; ";
        continue;
      }
      auto again = run_preset(name, scratch / (std::string(name) + "_b"));
      const bool same = !again.manifest.empty() && again.manifest == first[name].manifest;
      ok = ok && same;
      detail += std::string(name) + (same ? " identical" : " DIFFERS") + "; ";
    }
    detail.resize(detail.size() - 2);
    return Outcome{ok, "manifests of two seeded runs: " + detail};
  });

  fs::remove_all(scratch);
  std::printf("%d criteria failed\n", failures);
  return failures ? 1 : 0;
}
