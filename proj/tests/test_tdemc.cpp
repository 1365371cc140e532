#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "rifs/error.hpp"
#include "rifs/tdemc.hpp"

using namespace rifs;

namespace {

// The 4-node graph of the 2-state example: I = 11, II = 12, III = 21, IV = 22.
WeightedDigraph fig3() {
  WeightedDigraph g;
  g.set_edge(1, 1, 0.5), g.set_edge(1, 2, 0.5);
  g.set_edge(2, 3, 0.5), g.set_edge(2, 4, 0.5);
  g.set_edge(3, 1, 0.5), g.set_edge(3, 2, 0.5);
  g.set_edge(4, 3, 0.5), g.set_edge(4, 4, 0.5);
  return g;
}

std::vector<std::vector<int>> as_lists(const std::vector<Circuit>& cs) {
  std::vector<std::vector<int>> out;
  for (const auto& c : cs) out.push_back(c.nodes);
  return out;
}

// Windows of a cyclic word, as nodes of the word graph.
std::vector<int> embedded_walk(const std::vector<int>& cycle, int m, const oracle::WordGraph& wg) {
  std::vector<int> out;
  for (std::size_t i = 0; i < cycle.size(); ++i) {
    std::vector<int> w;
    for (int j = 0; j < m; ++j) w.push_back(cycle[(i + static_cast<std::size_t>(j)) % cycle.size()]);
    out.push_back(wg.id.at(w));
  }
  return out;
}

// Chain sizes whose delay graphs have few enough circuits to enumerate them
// all: the count grows roughly like (k!)^(k^(m-1)).
std::pair<int, int> circuit_sized_instance(int t) {
  static const std::pair<int, int> sizes[] = {{1, 2}, {1, 4}, {2, 2}, {2, 3}, {2, 4}, {3, 2}};
  return sizes[t % 6];
}

}  // namespace

TEST_CASE("transition graph examples") {
  auto g = transition_graph(SymbolSequence{1, {1, 1, 1}});
  CHECK(g.nodes == std::vector<int>{1});
  CHECK(g.weight(1, 1) == 1.0);
  auto alt = transition_graph(SymbolSequence{2, {1, 2, 1, 2, 1, 2}});
  CHECK(alt.weights.size() == 2);
  CHECK(alt.weight(1, 2) == 1.0);
  CHECK(alt.weight(2, 1) == 1.0);
  CHECK_THROWS_AS(transition_graph(SymbolSequence{2, {1, kGap, 2}}), Error);
  CHECK_NOTHROW(alt.validate());
}

TEST_CASE("embedding the 2-state chain at m = 2 gives the four-node graph") {
  auto P = TransitionMatrix::from_rows({{0.3, 0.7}, {0.6, 0.4}});
  auto e = embed_mc(P, 2);
  CHECK(e.graph.size() == 4);
  CHECK(e.graph.weights.size() == 8);
  auto ref = fig3();
  for (const auto& [edge, w] : ref.weights) CHECK(e.graph.has_edge(edge.first, edge.second));
  CHECK(e.phi.tuples.at(1) == std::vector<int>{1, 1});
  CHECK(e.phi.tuples.at(2) == std::vector<int>{1, 2});
  CHECK(e.phi.tuples.at(3) == std::vector<int>{2, 1});
  CHECK(e.phi.tuples.at(4) == std::vector<int>{2, 2});
  CHECK(e.graph.weight(2, 3) == 0.6);
  CHECK_NOTHROW(e.graph.validate());
}

TEST_CASE("single-state chain embeds to one self-loop for every m") {
  for (int m = 1; m <= 4; ++m) {
    auto e = embed_mc(TransitionMatrix::from_rows({{1.0}}), m);
    CHECK(e.graph.size() == 1);
    CHECK(e.graph.weight(1, 1) == 1.0);
    auto r = unembed(e.graph, m);
    CHECK(r.symbols == 1);
    CHECK(r.gx.weight(1, 1) == 1.0);
  }
}

TEST_CASE("embedded graph matches direct word enumeration") {
  Rng rng(12);
  for (int t = 0; t < 40; ++t) {
    const int k = 2 + t % 3, m = 2 + t % 3;
    auto P = oracle::random_irreducible(k, rng);
    auto e = embed_mc(P, m);
    auto wg = oracle::word_graph(P, m);
    REQUIRE(e.graph.size() == wg.words.size());
    std::size_t edges = 0;
    for (std::size_t i = 0; i < wg.words.size(); ++i) {
      CHECK(e.phi.tuples.at(static_cast<int>(i) + 1) == wg.words[i]);
      for (std::size_t j = 0; j < wg.words.size(); ++j) {
        const bool has = e.graph.has_edge(static_cast<int>(i) + 1, static_cast<int>(j) + 1);
        CHECK(has == wg.adj[i][j]);
        if (has) {
          ++edges;
          CHECK(e.graph.weight(static_cast<int>(i) + 1, static_cast<int>(j) + 1) ==
                P(wg.words[i].back() - 1, wg.words[j].back() - 1));
        }
      }
    }
    CHECK(edges == e.graph.weights.size());
  }
  CHECK_THROWS_AS(embed_mc(TransitionMatrix::from_rows({{1, 0}, {0.5, 0.5}}), 2), Error);
}

TEST_CASE("circuits of the four-node example") {
  auto cs = elementary_circuits(fig3());
  std::vector<std::vector<int>> want{{1}, {4}, {2, 3}, {1, 2, 3}, {2, 4, 3}, {1, 2, 4, 3}};
  CHECK(as_lists(cs) == want);
  CHECK(as_lists(circuits_of_length(fig3(), 3)) == std::vector<std::vector<int>>{{1, 2, 3}, {2, 4, 3}});
  WeightedDigraph loop;
  loop.set_edge(7, 7, 1.0);
  CHECK(as_lists(elementary_circuits(loop)) == std::vector<std::vector<int>>{{7}});
}

TEST_CASE("circuit enumeration matches a brute-force cycle oracle on small digraphs") {
  Rng rng(13);
  for (int t = 0; t < 300; ++t) {
    const int n = 1 + t % 5;
    auto g = oracle::random_digraph(n, 0.15 + 0.6 * rng.uniform(), rng);
    auto cs = elementary_circuits(g);
    auto lists = as_lists(cs);
    std::set<std::vector<int>> got(lists.begin(), lists.end());
    REQUIRE(got.size() == cs.size());
    CHECK(got == oracle::simple_cycles(g));
    for (std::size_t i = 1; i < cs.size(); ++i)
      CHECK(std::make_pair(cs[i - 1].size(), cs[i - 1].nodes) < std::make_pair(cs[i].size(), cs[i].nodes));
    for (std::size_t len = 1; len <= static_cast<std::size_t>(n); ++len)
      for (const auto& c : circuits_of_length(g, len)) CHECK(c.size() == len);
  }
}

TEST_CASE("directed distances") {
  auto g = fig3();
  CHECK(directed_distance(g, {2}, {2}) == 0);
  CHECK(directed_distance(g, {4}, {1}) == 2);
  CHECK(directed_distance(g, {1}, {4}) == 2);
  CHECK(directed_distance(g, {1, 4}, {3}) == 1);
  WeightedDigraph two;
  two.set_edge(1, 2, 1.0), two.set_edge(2, 1, 1.0), two.set_edge(3, 3, 1.0);
  CHECK(directed_distance(two, {1}, {3}) == kUnreachable);
  CHECK_THROWS_AS(directed_distance(two, {9}, {1}), Error);
  CHECK_THROWS_AS(directed_distance(two, {}, {1}), Error);
}

TEST_CASE("tuple assignment steps on the four-node example") {
  auto g = fig3();
  TupleAssignment phi;
  phi.m = 2;
  int next = 0;
  assign_tuples_to_circuit(Circuit{{1}}, g, 2, phi, next);
  CHECK(phi.tuples.at(1) == std::vector<int>{1, 1});
  CHECK(next == 1);
  assign_tuples_to_circuit(Circuit{{4}}, g, 2, phi, next);
  CHECK(phi.tuples.at(4) == std::vector<int>{2, 2});
  CHECK(next == 2);
  assign_tuples_to_circuit(Circuit{{2, 3}}, g, 2, phi, next);
  CHECK(phi.tuples.at(2) == std::vector<int>{1, 2});
  CHECK(phi.tuples.at(3) == std::vector<int>{2, 1});
  CHECK(next == 2);
  CHECK(phi.complete());
}

TEST_CASE("unembedding the four-node example") {
  auto r = unembed(fig3(), 2);
  CHECK(r.symbols == 2);
  CHECK(r.phi.tuples.at(1) == std::vector<int>{1, 1});
  CHECK(r.phi.tuples.at(2) == std::vector<int>{1, 2});
  CHECK(r.phi.tuples.at(3) == std::vector<int>{2, 1});
  CHECK(r.phi.tuples.at(4) == std::vector<int>{2, 2});
  CHECK(r.gx.weights.size() == 4);
  for (int a = 1; a <= 2; ++a)
    for (int b = 1; b <= 2; ++b) CHECK(r.gx.weight(a, b) == 0.5);
}

TEST_CASE("unembedding rejects graphs that are not delay-embedded chains") {
  WeightedDigraph split;
  split.set_edge(1, 1, 1.0), split.set_edge(2, 2, 1.0);
  CHECK_THROWS_AS(unembed(split, 2), Error);
  CHECK_THROWS_AS(unembed(fig3(), 0), Error);
}

TEST_CASE("round trip on random irreducible chains") {
  Rng rng(14);
  for (int t = 0; t < 120; ++t) {
    const int k = 2 + t % 4, m = 2 + (t / 4) % 3;
    auto P = oracle::random_irreducible(k, rng);
    auto e = embed_mc(P, m);
    auto r = unembed(e.graph, m);
    INFO("k=" << k << " m=" << m << " trial " << t);
    CHECK(oracle::check_round_trip(P, e, r, 1e-12) == "");
    CHECK(r.phi.complete());
  }
}

TEST_CASE("irreducibility equivalence between a chain and its delay graph") {
  Rng rng(15);
  int reducible = 0;
  for (int t = 0; t < 200; ++t) {
    const int k = 1 + t % 4, m = 1 + (t / 4) % 3;
    auto P = oracle::random_on_pattern(oracle::random_pattern(k, 0.2 + 0.5 * rng.uniform(), false, rng), rng);
    auto wg = oracle::word_graph(P, m);
    reducible += !is_irreducible(P);
    REQUIRE(is_irreducible(P) == oracle::strongly_connected(wg.adj));
    if (is_irreducible(P)) CHECK(embed_mc(P, m).graph.strongly_connected());
  }
  CHECK(reducible >= 30);
}

TEST_CASE("delay graphs have at least as many circuits as the chain") {
  Rng rng(16);
  for (int t = 0; t < 150; ++t) {
    auto [k, m] = circuit_sized_instance(t);
    auto P = oracle::random_irreducible(k, rng);
    CHECK(elementary_circuits(embed_mc(P, m).graph).size() >= elementary_circuits(from_matrix(P)).size());
  }
}

TEST_CASE("circuits of the delay graph project to closed walks and the shortest ones to circuits") {
  Rng rng(17);
  for (int t = 0; t < 150; ++t) {
    auto [k, m] = circuit_sized_instance(t);
    auto P = oracle::random_irreducible(k, rng);
    auto e = embed_mc(P, m);
    auto cs = elementary_circuits(e.graph);
    REQUIRE(!cs.empty());
    for (const auto& c : cs) {
      for (std::size_t i = 0; i < c.size(); ++i) {
        int a = e.phi.tuples.at(c.nodes[i])[0], b = e.phi.tuples.at(c.nodes[(i + 1) % c.size()])[0];
        CHECK(P(a - 1, b - 1) > 0.0);
      }
    }
    for (const auto& c : cs) {
      if (c.size() != cs.front().size()) break;
      std::set<int> sym;
      for (int v : c.nodes) sym.insert(e.phi.tuples.at(v)[0]);
      CHECK(sym.size() == c.size());
    }
  }
}

TEST_CASE("embedded node-disjoint closed walks lie at distance at least m") {
  Rng rng(18);
  int pairs = 0;
  for (int t = 0; pairs < 150 && t < 2000; ++t) {
    const int k = 3 + t % 3, m = 2 + t % 2;
    auto P = oracle::random_irreducible(k, rng);
    auto cycles = oracle::simple_cycles(from_matrix(P));
    auto wg = oracle::word_graph(P, m);
    auto e = embed_mc(P, m);
    std::vector<std::vector<int>> cl(cycles.begin(), cycles.end());
    for (std::size_t i = 0; i < cl.size(); ++i)
      for (std::size_t j = 0; j < cl.size(); ++j) {
        if (i == j) continue;
        bool disjoint = std::none_of(cl[i].begin(), cl[i].end(), [&](int v) {
          return std::find(cl[j].begin(), cl[j].end(), v) != cl[j].end();
        });
        if (!disjoint) continue;
        auto U = embedded_walk(cl[i], m, wg), V = embedded_walk(cl[j], m, wg);
        CHECK(directed_distance(e.graph, U, V) >= m);
        ++pairs;
      }
  }
  CHECK(pairs >= 100);
}

TEST_CASE("rare edges are pruned and weights renormalized") {
  SymbolSequence s{3, {}};
  for (int r = 0; r < 200; ++r) s.symbols.insert(s.symbols.end(), {1, 2, 1, 1});
  s.symbols.insert(s.symbols.end(), {3, 1});  // one stray visit to 3
  auto g = transition_graph(s);
  std::vector<std::string> dropped;
  auto p = prune_rare_edges(g, 0.01, &dropped);
  CHECK(!p.contains(3));
  CHECK(dropped.size() == 2);
  CHECK_NOTHROW(p.validate());
  CHECK(p.weight(2, 1) == 1.0);
  auto same = prune_rare_edges(g, 0.0);
  CHECK(same.weights == g.weights);
  CHECK_THROWS_AS(prune_rare_edges(fig3(), 0.01), Error);
}

TEST_CASE("empirical graphs use count-weighted means and keep rows stochastic") {
  Rng rng(19);
  for (int t = 0; t < 20; ++t) {
    const int k = 2 + t % 2, m = 2;
    auto P = oracle::random_irreducible(k, rng);
    auto x = sample_chain(P, 20000, rng.next());
    auto e = embed_mc(P, m);
    auto wg = oracle::word_graph(P, m);
    SymbolSequence z{static_cast<int>(wg.words.size()), {}};
    for (std::size_t n = 0; n + 1 < x.size(); ++n) z.symbols.push_back(wg.id.at({x[n], x[n + 1]}));
    auto gz = transition_graph(z);
    if (gz.size() != e.graph.size()) continue;  // a rare word never occurred
    auto r = unembed(gz, m);
    REQUIRE(r.symbols == k);
    CHECK_NOTHROW(r.gx.validate());
    // count-weighted mean of the G_Z edges sharing a projected edge
    std::map<std::pair<int, int>, std::pair<double, double>> acc;
    for (const auto& [edge, c] : gz.counts) {
      int a = r.phi.tuples.at(edge.first).back(), b = r.phi.tuples.at(edge.second).back();
      acc[{a, b}].first += static_cast<double>(c) * gz.weight(edge.first, edge.second);
      acc[{a, b}].second += static_cast<double>(c);
    }
    std::map<int, double> rowsum;
    for (const auto& [edge, v] : acc) rowsum[edge.first] += v.first / v.second;
    for (const auto& [edge, v] : acc)
      CHECK(r.gx.weight(edge.first, edge.second) == doctest::Approx(v.first / v.second / rowsum[edge.first]).epsilon(1e-12));
  }
}

TEST_CASE("graph and tuple files round trip") {
  Rng rng(20);
  auto P = oracle::random_irreducible(3, rng);
  auto e = embed_mc(P, 3);
  std::stringstream gs, ts;
  write_graph(gs, e.graph);
  write_tuples(ts, e.phi);
  auto g = read_graph(gs);
  auto phi = read_tuples(ts);
  CHECK(g.nodes == e.graph.nodes);
  CHECK(g.weights == e.graph.weights);
  CHECK(phi.tuples == e.phi.tuples);
  CHECK(phi.m == 3);

  auto emp = transition_graph(SymbolSequence{2, {1, 2, 2, 1, 1, 2}});
  std::stringstream es;
  write_graph(es, emp);
  auto back = read_graph(es);
  CHECK(back.counts == emp.counts);
  CHECK(back.weights == emp.weights);
}

TEST_CASE("matrix conversion") {
  auto P = TransitionMatrix::from_rows({{0.25, 0.75}, {1.0, 0.0}});
  auto g = from_matrix(P);
  CHECK(g.weights.size() == 3);
  auto Q = to_matrix(g);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) CHECK(Q(a, b) == P(a, b));
}

TEST_CASE("stopping once every tuple is complete matches walking every circuit") {
  Rng rng(21);
  for (int t = 0; t < 120; ++t) {
    auto [k, m] = circuit_sized_instance(t);
    auto P = oracle::random_irreducible(k, rng);
    auto g = embed_mc(P, m).graph;
    TupleAssignment phi;
    phi.m = m;
    int next = 0;
    for (const auto& c : elementary_circuits(g)) assign_tuples_to_circuit(c, g, m, phi, next);
    auto r = unembed(g, m);
    CHECK(phi.tuples == r.phi.tuples);
    CHECK(next == r.symbols);
  }
}
