#pragma once

#include <deque>
#include <vector>

#include "jtsmc/kernels.hpp"

namespace jtsmc::detail {

// Draws the neighbourhood part of an ExpansionMove. `Chooser` supplies
// bernoulli(p), below(n), subset(s) and nonempty_subset(s); Rng is one, and
// the oracle substitutes an exhaustive one to enumerate every move.
template <class Chooser>
void draw_expansion_move(const JunctionTree& t, const TreeLayout& L, const ExpanderConfig& cfg,
                         Chooser& ch, ExpansionMove& move) {
  if (ch.bernoulli(cfg.beta)) {
    move.isolated = true;
    return;
  }
  move.anchor = ch.below(t.size());
  const int root = L.component[move.anchor];
  std::vector<char> seen(L.members.size(), 0);
  seen[root] = 1;
  move.components.push_back(root);
  for (std::size_t i = 0; i < move.components.size(); ++i)
    for (int d : L.component_adj[move.components[i]]) {
      if (seen[d]) continue;
      seen[d] = 1;
      if (ch.bernoulli(cfg.alpha)) move.components.push_back(d);
    }

  std::vector<char> visited(t.size(), 0);
  for (int comp : move.components) {
    int local;
    NodeSet subset;
    if (comp == root) {
      local = move.anchor;
      subset = ch.nonempty_subset(t.cliques[local]);
    } else {
      const auto& m = L.members[comp];
      local = m[ch.below(static_cast<int>(m.size()))];
      subset = ch.subset(t.cliques[local]);
    }
    move.local_anchors.push_back(local);
    move.chosen.emplace_back(local, subset);
    visited[local] = 1;
    std::deque<std::pair<int, NodeSet>> queue{{local, subset}};
    while (!queue.empty()) {
      auto [q, sq] = queue.front();
      queue.pop_front();
      for (int c : L.clique_adj[q]) {
        if (visited[c]) continue;
        visited[c] = 1;
        const NodeSet r = t.cliques[q] & t.cliques[c];
        if (!r.subset_of(sq) || !ch.bernoulli(cfg.alpha)) continue;
        const NodeSet sc = r | ch.subset(t.cliques[c] - r);
        move.chosen.emplace_back(c, sc);
        queue.emplace_back(c, sc);
      }
    }
  }
}

}  // namespace jtsmc::detail
