#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rifs/markov.hpp"

namespace rifs {

// Directed graph on integer node labels with edge weights in (0, 1]. In
// transition-graph mode the outgoing weights of every node with successors
// sum to 1. Empirical graphs also carry the pair counts behind each weight.
struct WeightedDigraph {
  std::vector<int> nodes;  // ascending
  std::map<std::pair<int, int>, double> weights;
  std::map<std::pair<int, int>, std::int64_t> counts;  // empty for exact graphs

  bool empirical() const { return !counts.empty(); }
  std::size_t size() const { return nodes.size(); }
  bool contains(int label) const;
  std::size_t index(int label) const;  // throws for unknown labels
  bool has_edge(int u, int v) const { return weights.count({u, v}) != 0; }
  double weight(int u, int v) const;
  std::vector<int> successors(int label) const;
  // Successor lists by node index, ascending.
  std::vector<std::vector<int>> adjacency() const;

  void add_node(int label);
  void set_edge(int u, int v, double w);
  // Checks labels, weight range and (if stochastic) outgoing sums.
  void validate(bool stochastic = true) const;
  bool strongly_connected() const;
};

struct Circuit {
  std::vector<int> nodes;  // closing edge nodes.back() -> nodes.front() is implicit

  std::size_t size() const { return nodes.size(); }
  auto operator<=>(const Circuit&) const = default;
};

// m-tuples over the recovered alphabet 1, 2, ...; slot value 0 means unknown.
struct TupleAssignment {
  int m = 0;
  std::map<int, std::vector<int>> tuples;

  bool complete(int node) const;
  bool complete() const;
};

inline constexpr int kUnknownSlot = 0;
inline constexpr std::int64_t kUnreachable = std::numeric_limits<std::int64_t>::max();

// Empirical label-transition graph; pairs touching a gap are skipped.
WeightedDigraph transition_graph(const SymbolSequence& labels);

// Drops edges of an empirical graph whose count is below min_fraction of the
// source node's outgoing count (stray transitions from mislabeled points),
// then edges of nodes left without successors or predecessors. Weights are
// renormalized from the surviving counts.
WeightedDigraph prune_rare_edges(const WeightedDigraph& g, double min_fraction,
                                 std::vector<std::string>* dropped = nullptr);

struct EmbeddedChain {
  WeightedDigraph graph;
  TupleAssignment phi;
};

// Exact transition graph of the delay-embedded chain Y_n = X_n..X_{n+m-1}.
// Nodes are the positive-probability m-words, numbered 1.. in lexicographic
// order; phi maps each node to its word.
EmbeddedChain embed_mc(const TransitionMatrix& P, int m);

// Johnson's algorithm. Each circuit starts at its smallest label; the list is
// ordered by length, then lexicographically.
std::vector<Circuit> elementary_circuits(const WeightedDigraph& g);

// Circuits of exactly `length` nodes, same ordering. Used to walk the sorted
// circuit list one length at a time without enumerating it all.
std::vector<Circuit> circuits_of_length(const WeightedDigraph& g, std::size_t length);

std::int64_t directed_distance(const WeightedDigraph& g, const std::vector<int>& U, const std::vector<int>& V);

// One step of the unembedding: completes the tuples of every node on the
// circuit, allocating fresh symbols (next_symbol + 1, ...) only for slots no
// rule determines.
void assign_tuples_to_circuit(const Circuit& circuit, const WeightedDigraph& g, int m, TupleAssignment& partial,
                              int& next_symbol);

struct UnembedResult {
  WeightedDigraph gx;  // nodes 1..symbols
  TupleAssignment phi;
  int symbols = 0;
  std::size_t circuits_used = 0;  // circuits taken from the sorted list
  std::vector<std::string> warnings;
};

// Recovers the underlying chain graph and the node -> m-tuple map from the
// transition graph of an m-delay-embedded chain.
UnembedResult unembed(const WeightedDigraph& g, int m);

// Dense matrix of a graph whose nodes are exactly 1..k.
TransitionMatrix to_matrix(const WeightedDigraph& g);
WeightedDigraph from_matrix(const TransitionMatrix& P);

void write_graph(std::ostream& os, const WeightedDigraph& g);
WeightedDigraph read_graph(std::istream& is);
void write_tuples(std::ostream& os, const TupleAssignment& phi);
TupleAssignment read_tuples(std::istream& is);

}  // namespace rifs
