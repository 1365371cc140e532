#include "rifs/tdemc.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "graph_util.hpp"
#include "rifs/error.hpp"
#include "rifs/io.hpp"

namespace rifs {

bool WeightedDigraph::contains(int label) const { return std::binary_search(nodes.begin(), nodes.end(), label); }

std::size_t WeightedDigraph::index(int label) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), label);
  if (it == nodes.end() || *it != label) fail(ErrorCode::InvalidArgument, "unknown node label " + std::to_string(label));
  return static_cast<std::size_t>(it - nodes.begin());
}

double WeightedDigraph::weight(int u, int v) const {
  auto it = weights.find({u, v});
  return it == weights.end() ? 0.0 : it->second;
}

std::vector<int> WeightedDigraph::successors(int label) const {
  std::vector<int> out;
  for (auto it = weights.lower_bound({label, std::numeric_limits<int>::min()}); it != weights.end() && it->first.first == label;
       ++it)
    out.push_back(it->first.second);
  return out;
}

std::vector<std::vector<int>> WeightedDigraph::adjacency() const {
  std::vector<std::vector<int>> adj(nodes.size());
  for (const auto& [e, w] : weights) adj[index(e.first)].push_back(static_cast<int>(index(e.second)));
  return adj;
}

void WeightedDigraph::add_node(int label) {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), label);
  if (it == nodes.end() || *it != label) nodes.insert(it, label);
}

void WeightedDigraph::set_edge(int u, int v, double w) {
  if (!(w > 0.0 && w <= 1.0 + 1e-12))
    fail(ErrorCode::InvalidArgument, "edge " + std::to_string(u) + "->" + std::to_string(v) + " has weight outside (0,1]");
  add_node(u);
  add_node(v);
  weights[{u, v}] = w;
}

void WeightedDigraph::validate(bool stochastic) const {
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (nodes[i - 1] >= nodes[i]) fail(ErrorCode::InvalidArgument, "graph node labels must be distinct and sorted");
  std::map<int, double> out;
  for (const auto& [e, w] : weights) {
    index(e.first);
    index(e.second);
    if (!(w > 0.0 && w <= 1.0 + 1e-12))
      fail(ErrorCode::InvalidArgument,
           "edge " + std::to_string(e.first) + "->" + std::to_string(e.second) + " has weight outside (0,1]");
    out[e.first] += w;
  }
  if (stochastic)
    for (const auto& [u, s] : out)
      if (std::abs(s - 1.0) > 1e-9)
        fail(ErrorCode::InvalidArgument, "outgoing weights of node " + std::to_string(u) + " sum to " + fmt(s));
}

bool WeightedDigraph::strongly_connected() const { return detail::strongly_connected(adjacency()); }

bool TupleAssignment::complete(int node) const {
  auto it = tuples.find(node);
  if (it == tuples.end()) return false;
  return std::find(it->second.begin(), it->second.end(), kUnknownSlot) == it->second.end();
}

bool TupleAssignment::complete() const {
  for (const auto& [v, t] : tuples)
    if (!complete(v)) return false;
  return true;
}

WeightedDigraph transition_graph(const SymbolSequence& labels) {
  std::map<std::pair<int, int>, std::int64_t> counts;
  std::map<int, std::int64_t> out;
  for (std::size_t i = 0; i + 1 < labels.size(); ++i) {
    int a = labels[i], b = labels[i + 1];
    if (a < 0 || b < 0) fail(ErrorCode::InvalidArgument, "transition_graph: negative label at position " + std::to_string(i + 1));
    if (a == kGap || b == kGap) continue;
    ++counts[{a, b}];
    ++out[a];
  }
  if (counts.empty()) fail(ErrorCode::InvalidArgument, "transition_graph: no consecutive labeled pair");
  WeightedDigraph g;
  for (const auto& [e, c] : counts) {
    g.set_edge(e.first, e.second, static_cast<double>(c) / static_cast<double>(out[e.first]));
    g.counts[e] = c;
  }
  return g;
}

WeightedDigraph prune_rare_edges(const WeightedDigraph& g, double min_fraction, std::vector<std::string>* dropped) {
  if (!g.empirical()) fail(ErrorCode::InvalidArgument, "prune_rare_edges: graph carries no counts");
  if (!(min_fraction >= 0.0 && min_fraction < 1.0))
    fail(ErrorCode::InvalidArgument, "prune_rare_edges: fraction must lie in [0, 1)");
  std::map<std::pair<int, int>, std::int64_t> kept = g.counts;
  // Dropping an edge can strand a node, which removes its other edges too.
  for (bool changed = true; changed;) {
    changed = false;
    std::map<int, std::int64_t> out, in;
    for (const auto& [e, c] : kept) out[e.first] += c, in[e.second] += c;
    for (auto it = kept.begin(); it != kept.end();) {
      const auto [u, v] = it->first;
      const bool rare = static_cast<double>(it->second) < min_fraction * static_cast<double>(out[u]);
      const bool stranded = !out.count(v) || !in.count(u);
      if (rare || stranded) {
        if (dropped)
          dropped->push_back(std::to_string(u) + " -> " + std::to_string(v) + " (count " + std::to_string(it->second) +
                             (rare ? ", rare)" : ", stranded)"));
        it = kept.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
  if (kept.empty()) fail(ErrorCode::InvalidArgument, "prune_rare_edges: no edge survives");
  std::map<int, std::int64_t> out;
  for (const auto& [e, c] : kept) out[e.first] += c;
  WeightedDigraph r;
  for (const auto& [e, c] : kept) {
    r.set_edge(e.first, e.second, static_cast<double>(c) / static_cast<double>(out[e.first]));
    r.counts[e] = c;
  }
  return r;
}

EmbeddedChain embed_mc(const TransitionMatrix& P, int m) {
  if (m < 1) fail(ErrorCode::InvalidArgument, "embed_mc: delay size must be at least 1");
  if (!is_irreducible(P)) fail(ErrorCode::InvalidArgument, "embed_mc: transition matrix is reducible");
  const int k = P.k();
  // admissible words in lexicographic order
  std::vector<std::vector<int>> words;
  std::vector<int> w;
  std::function<void()> extend = [&] {
    if (static_cast<int>(w.size()) == m) {
      words.push_back(w);
      return;
    }
    for (int b = 1; b <= k; ++b)
      if (w.empty() || P(w.back() - 1, b - 1) > 0.0) {
        w.push_back(b);
        extend();
        w.pop_back();
      }
  };
  extend();
  std::map<std::vector<int>, int> id;
  EmbeddedChain out;
  out.phi.m = m;
  for (std::size_t i = 0; i < words.size(); ++i) {
    id[words[i]] = static_cast<int>(i) + 1;
    out.phi.tuples[static_cast<int>(i) + 1] = words[i];
    out.graph.add_node(static_cast<int>(i) + 1);
  }
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto& a = words[i];
    for (int b = 1; b <= k; ++b) {
      double p = P(a.back() - 1, b - 1);
      if (p <= 0.0) continue;
      std::vector<int> next(a.begin() + 1, a.end());
      next.push_back(b);
      out.graph.set_edge(static_cast<int>(i) + 1, id.at(next), p);
    }
  }
  return out;
}

namespace {

bool circuit_less(const Circuit& a, const Circuit& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a.nodes < b.nodes;
}

// Johnson (1975): for each start s, search the strongly connected component
// containing s in the subgraph induced by nodes >= s, with blocking.
class Johnson {
 public:
  explicit Johnson(const std::vector<std::vector<int>>& adj) : adj_(adj), n_(adj.size()) {}

  std::vector<std::vector<int>> run() {
    blocked_.assign(n_, 0);
    bmap_.assign(n_, {});
    for (std::size_t s = 0; s < n_; ++s) {
      comp_ = component_of(static_cast<int>(s));
      if (comp_.empty()) continue;
      for (std::size_t v = s; v < n_; ++v) {
        blocked_[v] = 0;
        bmap_[v].clear();
      }
      start_ = static_cast<int>(s);
      circuit(start_);
    }
    return std::move(out_);
  }

 private:
  // Nodes >= s in the strongly connected component of s within that
  // subgraph; empty if s has no cycle there.
  std::vector<char> component_of(int s) {
    auto reach = [&](bool forward) {
      std::vector<char> seen(n_, 0);
      std::vector<int> st{s};
      seen[static_cast<std::size_t>(s)] = 1;
      while (!st.empty()) {
        int u = st.back();
        st.pop_back();
        for (std::size_t x = static_cast<std::size_t>(s); x < n_; ++x) {
          bool edge = forward ? has(u, static_cast<int>(x)) : has(static_cast<int>(x), u);
          if (edge && !seen[x]) {
            seen[x] = 1;
            st.push_back(static_cast<int>(x));
          }
        }
      }
      return seen;
    };
    auto f = reach(true), b = reach(false);
    std::vector<char> c(n_, 0);
    bool cyc = has(s, s);
    for (std::size_t x = static_cast<std::size_t>(s); x < n_; ++x) {
      c[x] = f[x] && b[x];
      if (c[x] && x != static_cast<std::size_t>(s)) cyc = true;
    }
    if (!cyc) return {};
    return c;
  }

  bool has(int u, int v) const {
    const auto& a = adj_[static_cast<std::size_t>(u)];
    return std::binary_search(a.begin(), a.end(), v);
  }

  void unblock(int u) {
    blocked_[static_cast<std::size_t>(u)] = 0;
    auto list = std::move(bmap_[static_cast<std::size_t>(u)]);
    bmap_[static_cast<std::size_t>(u)].clear();
    for (int w : list)
      if (blocked_[static_cast<std::size_t>(w)]) unblock(w);
  }

  bool circuit(int v) {
    bool found = false;
    stack_.push_back(v);
    blocked_[static_cast<std::size_t>(v)] = 1;
    for (int w : adj_[static_cast<std::size_t>(v)]) {
      if (!comp_[static_cast<std::size_t>(w)]) continue;
      if (w == start_) {
        out_.push_back(stack_);
        found = true;
      } else if (!blocked_[static_cast<std::size_t>(w)] && circuit(w)) {
        found = true;
      }
    }
    if (found) {
      unblock(v);
    } else {
      for (int w : adj_[static_cast<std::size_t>(v)]) {
        if (!comp_[static_cast<std::size_t>(w)]) continue;
        auto& b = bmap_[static_cast<std::size_t>(w)];
        if (std::find(b.begin(), b.end(), v) == b.end()) b.push_back(v);
      }
    }
    stack_.pop_back();
    return found;
  }

  const std::vector<std::vector<int>>& adj_;
  std::size_t n_;
  int start_ = 0;
  std::vector<char> blocked_, comp_;
  std::vector<std::vector<int>> bmap_;
  std::vector<int> stack_;
  std::vector<std::vector<int>> out_;
};

std::vector<Circuit> to_circuits(const WeightedDigraph& g, const std::vector<std::vector<int>>& raw) {
  std::vector<Circuit> out;
  out.reserve(raw.size());
  for (const auto& c : raw) {
    Circuit ci;
    for (int x : c) ci.nodes.push_back(g.nodes[static_cast<std::size_t>(x)]);
    out.push_back(std::move(ci));
  }
  std::sort(out.begin(), out.end(), circuit_less);
  return out;
}

// All-pairs BFS distances on node indices.
std::vector<std::int64_t> all_pairs_distance(const std::vector<std::vector<int>>& adj) {
  const std::size_t n = adj.size();
  std::vector<std::int64_t> d(n * n, kUnreachable);
  std::vector<int> queue(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::int64_t* row = &d[s * n];
    row[s] = 0;
    std::size_t head = 0, tail = 0;
    queue[tail++] = static_cast<int>(s);
    while (head < tail) {
      int u = queue[head++];
      for (int v : adj[static_cast<std::size_t>(u)])
        if (row[v] == kUnreachable) {
          row[v] = row[u] + 1;
          queue[tail++] = v;
        }
    }
  }
  return d;
}

class CircuitsByLength {
 public:
  explicit CircuitsByLength(const WeightedDigraph& g) : g_(g), adj_(g.adjacency()), dist_(all_pairs_distance(adj_)) {}

  std::vector<Circuit> of_length(std::size_t L) {
    const std::size_t n = adj_.size();
    std::vector<std::vector<int>> raw;
    std::vector<int> path;
    std::vector<char> on(n, 0);
    std::function<void(int, int)> dfs = [&](int s, int v) {
      if (path.size() == L) {
        if (std::binary_search(adj_[static_cast<std::size_t>(v)].begin(), adj_[static_cast<std::size_t>(v)].end(), s))
          raw.push_back(path);
        return;
      }
      const auto remaining = static_cast<std::int64_t>(L - path.size());
      for (int w : adj_[static_cast<std::size_t>(v)]) {
        if (w <= s || on[static_cast<std::size_t>(w)]) continue;
        if (dist_[static_cast<std::size_t>(w) * n + static_cast<std::size_t>(s)] > remaining) continue;
        on[static_cast<std::size_t>(w)] = 1;
        path.push_back(w);
        dfs(s, w);
        path.pop_back();
        on[static_cast<std::size_t>(w)] = 0;
      }
    };
    for (std::size_t s = 0; s < n; ++s) {
      path.assign(1, static_cast<int>(s));
      on[s] = 1;
      dfs(static_cast<int>(s), static_cast<int>(s));
      on[s] = 0;
    }
    return to_circuits(g_, raw);
  }

  const std::vector<std::int64_t>& distances() const { return dist_; }

 private:
  const WeightedDigraph& g_;
  std::vector<std::vector<int>> adj_;
  std::vector<std::int64_t> dist_;
};

std::string describe(const Circuit& c) {
  std::string s = "{";
  for (std::size_t i = 0; i < c.size(); ++i) s += (i ? "," : "") + std::to_string(c.nodes[i]);
  return s + "}";
}

// Tuple inference for one circuit. Walking the circuit shifts the tuple by
// one symbol per step, so node i carries the cyclic word s_i, s_{i+1}, ...,
// s_{i+m-1}; every known slot pins one letter of that word. Known slots of
// any node u within distance d < m pin slots of circuit nodes too: a path
// v -> u of length d gives v[d+j] = u[j], a path u -> v gives v[j] = u[d+j].
void assign_with_distances(const Circuit& circuit, const WeightedDigraph& g, int m, TupleAssignment& partial,
                           int& next_symbol, const std::vector<std::int64_t>& dist) {
  const std::size_t n = circuit.size();
  const std::size_t N = g.size();
  if (n == 0) fail(ErrorCode::InvalidArgument, "assign_tuples_to_circuit: empty circuit");
  for (std::size_t i = 0; i < n; ++i)
    if (!g.has_edge(circuit.nodes[i], circuit.nodes[(i + 1) % n]))
      fail(ErrorCode::InvalidArgument, "assign_tuples_to_circuit: " + describe(circuit) + " is not a circuit of the graph");

  std::vector<int> word(n, kUnknownSlot);
  auto pin = [&](std::size_t i, int slot, int value) {  // slot is 0-based
    if (value == kUnknownSlot) return;
    int& x = word[(i + static_cast<std::size_t>(slot)) % n];
    if (x != kUnknownSlot && x != value)
      fail(ErrorCode::Inconsistent, "unembed: tuple rules conflict on circuit " + describe(circuit) + " at node " +
                                        std::to_string(circuit.nodes[i]) + " (input is not an " + std::to_string(m) +
                                        "-delay embedded chain)");
    x = value;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const int v = circuit.nodes[i];
    const std::size_t vi = g.index(v);
    if (auto it = partial.tuples.find(v); it != partial.tuples.end())
      for (int j = 0; j < m; ++j) pin(i, j, it->second[static_cast<std::size_t>(j)]);
    for (const auto& [u, tu] : partial.tuples) {
      if (u == v) continue;
      const std::size_t ui = g.index(u);
      const std::int64_t dvu = dist[vi * N + ui], duv = dist[ui * N + vi];
      if (dvu < m)
        for (int j = 0; j + static_cast<int>(dvu) < m; ++j) pin(i, static_cast<int>(dvu) + j, tu[static_cast<std::size_t>(j)]);
      if (duv < m)
        for (int j = 0; j + static_cast<int>(duv) < m; ++j) pin(i, j, tu[static_cast<std::size_t>(duv) + static_cast<std::size_t>(j)]);
    }
  }
  // fresh symbols: first incomplete node in circuit order, first missing slot
  for (std::size_t i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      int& x = word[(i + static_cast<std::size_t>(j)) % n];
      if (x == kUnknownSlot) x = ++next_symbol;
    }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> t(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) t[static_cast<std::size_t>(j)] = word[(i + static_cast<std::size_t>(j)) % n];
    partial.tuples[circuit.nodes[i]] = std::move(t);
  }
}

}  // namespace

std::vector<Circuit> elementary_circuits(const WeightedDigraph& g) {
  auto adj = g.adjacency();
  return to_circuits(g, Johnson(adj).run());
}

std::vector<Circuit> circuits_of_length(const WeightedDigraph& g, std::size_t length) {
  if (length == 0) return {};
  return CircuitsByLength(g).of_length(length);
}

std::int64_t directed_distance(const WeightedDigraph& g, const std::vector<int>& U, const std::vector<int>& V) {
  if (U.empty() || V.empty()) fail(ErrorCode::InvalidArgument, "directed_distance: node sets must be nonempty");
  const auto adj = g.adjacency();
  std::vector<std::int64_t> d(g.size(), kUnreachable);
  std::deque<int> q;
  for (int u : U) {
    auto i = g.index(u);
    if (d[i] != 0) {
      d[i] = 0;
      q.push_back(static_cast<int>(i));
    }
  }
  std::vector<char> target(g.size(), 0);
  for (int v : V) target[g.index(v)] = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    if (target[static_cast<std::size_t>(u)]) return d[static_cast<std::size_t>(u)];
    for (int w : adj[static_cast<std::size_t>(u)])
      if (d[static_cast<std::size_t>(w)] == kUnreachable) {
        d[static_cast<std::size_t>(w)] = d[static_cast<std::size_t>(u)] + 1;
        q.push_back(w);
      }
  }
  return kUnreachable;
}

void assign_tuples_to_circuit(const Circuit& circuit, const WeightedDigraph& g, int m, TupleAssignment& partial,
                              int& next_symbol) {
  if (m < 1) fail(ErrorCode::InvalidArgument, "assign_tuples_to_circuit: delay size must be at least 1");
  if (partial.m == 0) partial.m = m;
  if (partial.m != m) fail(ErrorCode::InvalidArgument, "assign_tuples_to_circuit: tuple length mismatch");
  for (const auto& [u, t] : partial.tuples) {
    g.index(u);
    if (static_cast<int>(t.size()) != m) fail(ErrorCode::InvalidArgument, "assign_tuples_to_circuit: tuple length mismatch");
  }
  assign_with_distances(circuit, g, m, partial, next_symbol, all_pairs_distance(g.adjacency()));
}

UnembedResult unembed(const WeightedDigraph& g, int m) {
  if (m < 1) fail(ErrorCode::InvalidArgument, "unembed: delay size must be at least 1");
  if (g.size() == 0) fail(ErrorCode::InvalidArgument, "unembed: empty graph");
  g.validate(true);
  if (!g.strongly_connected())
    fail(ErrorCode::InvalidArgument, "unembed: transition graph is not strongly connected (the chain is not irreducible)");

  UnembedResult res;
  res.phi.m = m;
  CircuitsByLength circuits(g);
  const auto& dist = circuits.distances();
  std::set<std::pair<int, int>> gx_edges;
  std::map<std::pair<int, int>, double> first_weight;  // weight copied when the edge entered G_X
  int next_symbol = 0;
  auto beta = [&](int v) { return res.phi.tuples.at(v).back(); };
  auto done = [&] {
    if (res.phi.tuples.size() != g.size() || !res.phi.complete()) return false;
    for (const auto& [e, w] : g.weights)
      if (!gx_edges.count({beta(e.first), beta(e.second)})) return false;
    return true;
  };

  // The sorted circuit list is consumed one length at a time. Once every
  // node has a complete tuple and every edge projects into G_X, the
  // remaining circuits can neither allocate symbols nor add edges.
  for (std::size_t L = 1; L <= g.size() && !done(); ++L) {
    for (const Circuit& c : circuits.of_length(L)) {
      ++res.circuits_used;
      assign_with_distances(c, g, m, res.phi, next_symbol, dist);
      const std::size_t n = c.size();
      bool covered = true;
      for (std::size_t i = 0; i < n; ++i)
        covered = covered && gx_edges.count({beta(c.nodes[i]), beta(c.nodes[(i + 1) % n])});
      if (!covered)
        for (std::size_t i = 0; i < n; ++i) {
          std::pair<int, int> e{beta(c.nodes[i]), beta(c.nodes[(i + 1) % n])};
          if (gx_edges.insert(e).second) first_weight[e] = g.weight(c.nodes[i], c.nodes[(i + 1) % n]);
        }
      if (done()) break;
    }
  }
  if (!done()) fail(ErrorCode::Inconsistent, "unembed: circuits did not cover the graph");
  res.symbols = next_symbol;

  // completed assignment: shift overlap on every edge, injective
  std::map<std::vector<int>, int> seen;
  for (const auto& [v, t] : res.phi.tuples)
    if (auto [it, fresh] = seen.emplace(t, v); !fresh)
      fail(ErrorCode::Inconsistent,
           "unembed: nodes " + std::to_string(it->second) + " and " + std::to_string(v) + " received the same tuple");
  for (const auto& [e, w] : g.weights) {
    const auto& a = res.phi.tuples.at(e.first);
    const auto& b = res.phi.tuples.at(e.second);
    if (!std::equal(a.begin() + 1, a.end(), b.begin()))
      fail(ErrorCode::Inconsistent, "unembed: edge " + std::to_string(e.first) + "->" + std::to_string(e.second) +
                                        " violates the tuple overlap");
  }

  // weight reconciliation across all G_Z edges with the same projection
  struct Acc {
    double sum = 0.0, wsum = 0.0, lo = 1.0, hi = 0.0;
    std::int64_t count = 0;
    std::size_t n = 0;
  };
  std::map<std::pair<int, int>, Acc> acc;
  for (const auto& [e, w] : g.weights) {
    auto& a = acc[{beta(e.first), beta(e.second)}];
    const std::int64_t c = g.empirical() ? g.counts.at(e) : 1;
    a.sum += w * static_cast<double>(c);
    a.count += c;
    a.lo = std::min(a.lo, w);
    a.hi = std::max(a.hi, w);
    ++a.n;
  }
  for (int s = 1; s <= next_symbol; ++s) res.gx.add_node(s);
  for (const auto& [e, a] : acc) {
    const double mean = a.sum / static_cast<double>(a.count);
    double w = first_weight.at(e);
    bool agree = true;
    if (g.empirical()) {
      for (const auto& [ze, zw] : g.weights)
        if (beta(ze.first) == e.first && beta(ze.second) == e.second &&
            std::abs(zw - mean) > 3.0 / std::sqrt(static_cast<double>(g.counts.at(ze))))
          agree = false;
      w = mean;
    } else {
      agree = a.hi - a.lo <= 1e-6;
      if (!agree) w = mean;
    }
    if (!agree)
      res.warnings.push_back("edge " + std::to_string(e.first) + "->" + std::to_string(e.second) +
                             ": embedded edge weights disagree (range " + fmt(a.lo) + " .. " + fmt(a.hi) +
                             "), using the count-weighted mean");
    res.gx.weights[e] = w;
  }
  if (g.empirical()) {
    // means of independent estimates need not sum to one; rescale rows
    std::map<int, double> out;
    for (const auto& [e, w] : res.gx.weights) out[e.first] += w;
    for (auto& [e, w] : res.gx.weights) w /= out[e.first];
    for (const auto& [e, a] : acc) res.gx.counts[e] = a.count;
  }
  return res;
}

TransitionMatrix to_matrix(const WeightedDigraph& g) {
  const int k = static_cast<int>(g.size());
  for (int i = 0; i < k; ++i)
    if (g.nodes[static_cast<std::size_t>(i)] != i + 1)
      fail(ErrorCode::InvalidArgument, "to_matrix: graph nodes must be exactly 1..k");
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(k), 0.0));
  for (const auto& [e, w] : g.weights) rows[static_cast<std::size_t>(e.first - 1)][static_cast<std::size_t>(e.second - 1)] = w;
  return TransitionMatrix::from_rows(rows);
}

WeightedDigraph from_matrix(const TransitionMatrix& P) {
  WeightedDigraph g;
  for (int a = 1; a <= P.k(); ++a) g.add_node(a);
  for (int a = 0; a < P.k(); ++a)
    for (int b = 0; b < P.k(); ++b)
      if (P(a, b) > 0.0) g.set_edge(a + 1, b + 1, P(a, b));
  return g;
}

void write_graph(std::ostream& os, const WeightedDigraph& g) {
  os << "nodes";
  for (int v : g.nodes) os << ' ' << v;
  os << '\n';
  for (const auto& [e, w] : g.weights) {
    os << e.first << ' ' << e.second << ' ' << fmt(w);
    if (g.empirical()) os << ' ' << g.counts.at(e);
    os << '\n';
  }
}

WeightedDigraph read_graph(std::istream& is) {
  WeightedDigraph g;
  std::string line;
  bool header = false;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (!header) {
      if (first != "nodes") fail(ErrorCode::Io, "graph file: expected 'nodes' header on line " + std::to_string(lineno));
      std::string tok;
      while (ls >> tok) g.add_node(parse_int(tok));
      header = true;
      continue;
    }
    std::vector<std::string> f{first};
    std::string tok;
    while (ls >> tok) f.push_back(tok);
    if (f.size() != 3 && f.size() != 4)
      fail(ErrorCode::Io, "graph file: expected 'u v weight [count]' on line " + std::to_string(lineno));
    int u = parse_int(f[0]), v = parse_int(f[1]);
    if (!g.contains(u) || !g.contains(v))
      fail(ErrorCode::Io, "graph file: edge on line " + std::to_string(lineno) + " uses a node missing from the header");
    g.set_edge(u, v, parse_double(f[2]));
    if (f.size() == 4) g.counts[{u, v}] = parse_int(f[3]);
  }
  if (!header) fail(ErrorCode::Io, "graph file: missing 'nodes' header");
  if (!g.counts.empty() && g.counts.size() != g.weights.size())
    fail(ErrorCode::Io, "graph file: counts must be given for all edges or none");
  return g;
}

void write_tuples(std::ostream& os, const TupleAssignment& phi) {
  for (const auto& [v, t] : phi.tuples) {
    os << v << ' ';
    for (std::size_t j = 0; j < t.size(); ++j) os << (j ? "," : "") << t[j];
    os << '\n';
  }
}

TupleAssignment read_tuples(std::istream& is) {
  TupleAssignment phi;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string node, tuple;
    if (!(ls >> node)) continue;
    if (!(ls >> tuple)) fail(ErrorCode::Io, "tuple file: missing tuple on line " + std::to_string(lineno));
    std::vector<int> t;
    std::istringstream ts(tuple);
    std::string item;
    while (std::getline(ts, item, ',')) t.push_back(parse_int(item));
    if (phi.m == 0) phi.m = static_cast<int>(t.size());
    if (static_cast<int>(t.size()) != phi.m) fail(ErrorCode::Io, "tuple file: inconsistent tuple length on line " + std::to_string(lineno));
    phi.tuples[parse_int(node)] = std::move(t);
  }
  return phi;
}

}  // namespace rifs
