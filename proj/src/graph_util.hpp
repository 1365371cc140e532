#pragma once

#include <vector>

namespace rifs::detail {

inline std::vector<char> reachable_from(const std::vector<std::vector<int>>& adj, int s) {
  std::vector<char> seen(adj.size(), 0);
  std::vector<int> stack{s};
  seen[static_cast<std::size_t>(s)] = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : adj[static_cast<std::size_t>(u)])
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        stack.push_back(v);
      }
  }
  return seen;
}

// Strongly connected iff every node is reachable from node 0 in the graph and
// in its reverse.
inline bool strongly_connected(const std::vector<std::vector<int>>& adj) {
  const std::size_t n = adj.size();
  if (n == 0) return false;
  std::vector<std::vector<int>> rev(n);
  for (std::size_t u = 0; u < n; ++u)
    for (int v : adj[u]) rev[static_cast<std::size_t>(v)].push_back(static_cast<int>(u));
  for (const auto& seen : {reachable_from(adj, 0), reachable_from(rev, 0)})
    for (char c : seen)
      if (!c) return false;
  return true;
}

}  // namespace rifs::detail
