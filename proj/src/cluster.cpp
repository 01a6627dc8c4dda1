#include "ain/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "ain/utf8.hpp"

namespace ain {

Linkage parse_linkage(const std::string& name) {
  if (name == "average") return Linkage::average;
  if (name == "complete") return Linkage::complete;
  if (name == "single") return Linkage::single;
  throw DomainError("unknown linkage '" + name + "'");
}

std::string to_string(Linkage linkage) {
  switch (linkage) {
    case Linkage::average: return "average";
    case Linkage::complete: return "complete";
    case Linkage::single: return "single";
  }
  return "average";
}

ClusterTree::ClusterTree(std::vector<ClusterNode> nodes, std::vector<char32_t> leaf_chars)
    : nodes_(std::move(nodes)), leaf_chars_(std::move(leaf_chars)), parent_(nodes_.size(), kNoNode) {
  for (const auto& node : nodes_) {
    if (!node.is_leaf()) {
      parent_.at(static_cast<std::size_t>(node.left)) = node.id;
      parent_.at(static_cast<std::size_t>(node.right)) = node.id;
    }
  }
  for (std::size_t i = 0; i < leaf_chars_.size(); ++i) leaf_index_.emplace(leaf_chars_[i], static_cast<int>(i));
}

const ClusterNode& ClusterTree::node(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) throw DomainError("no cluster node " + std::to_string(id));
  return nodes_[static_cast<std::size_t>(id)];
}

int ClusterTree::leaf_of(char32_t ch) const {
  auto it = leaf_index_.find(ch);
  if (it == leaf_index_.end()) throw NotFoundError("character '" + utf8::encode(ch) + "' is not a leaf of the tree");
  return it->second;
}

std::vector<Merge> ClusterTree::merges() const {
  std::vector<Merge> out;
  for (std::size_t id = leaf_chars_.size(); id < nodes_.size(); ++id) {
    out.push_back({nodes_[id].left, nodes_[id].right, nodes_[id].height});
  }
  return out;
}

Vector ClusterTree::cophenetic_row(char32_t ch) const {
  Vector row = Vector::Zero(static_cast<Eigen::Index>(leaf_chars_.size()));
  int prev = leaf_of(ch);
  for (int id = parent_of(prev); id != kNoNode; prev = id, id = parent_of(id)) {
    const ClusterNode& n = nodes_[static_cast<std::size_t>(id)];
    const ClusterNode& sibling = node(n.left == prev ? n.right : n.left);
    for (char32_t m : sibling.members) row(leaf_index_.at(m)) = n.height;
  }
  return row;
}

namespace {

struct Active {
  int node;
  char32_t min_cp;
  std::size_t size;
};

// Total order over candidate merges: distance, then the pair's smallest member
// codepoints compared lexicographically.
using PairKey = std::tuple<double, char32_t, char32_t>;

}  // namespace

ClusterTree build_tree(const EmbeddingTable& table, Linkage linkage) {
  const std::size_t n = table.size();
  if (n < 2) throw DomainError("clustering needs at least 2 characters");
  const auto N = static_cast<Eigen::Index>(n);

  Matrix dist(N, N);
  {
    const Matrix unit = table.vectors().array().colwise() / table.norms().array();
    const Matrix gram = unit * unit.transpose();
    for (Eigen::Index i = 0; i < N; ++i) {
      dist(i, i) = 0.0;
      for (Eigen::Index j = i + 1; j < N; ++j) {
        const double d = 1.0 - std::clamp(gram(i, j), -1.0, 1.0);
        dist(i, j) = d;
        dist(j, i) = d;
      }
    }
  }

  std::vector<ClusterNode> nodes;
  nodes.reserve(2 * n - 1);
  std::vector<Active> slots(n);
  for (std::size_t i = 0; i < n; ++i) {
    ClusterNode leaf;
    leaf.id = static_cast<int>(i);
    leaf.members = {table.chars()[i]};
    nodes.push_back(std::move(leaf));
    slots[i] = {static_cast<int>(i), table.chars()[i], 1};
  }
  std::vector<bool> alive(n, true);

  auto key = [&](std::size_t a, std::size_t b) {
    const char32_t x = slots[a].min_cp, y = slots[b].min_cp;
    return PairKey{dist(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)), std::min(x, y), std::max(x, y)};
  };

  std::vector<std::size_t> best(n, 0);
  auto refresh = [&](std::size_t a) {
    bool found = false;
    PairKey best_key{};
    for (std::size_t b = 0; b < n; ++b) {
      if (b == a || !alive[b]) continue;
      const PairKey k = key(a, b);
      if (!found || k < best_key) {
        best_key = k;
        best[a] = b;
        found = true;
      }
    }
  };
  for (std::size_t a = 0; a < n; ++a) refresh(a);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t pa = n;
    PairKey best_key{};
    for (std::size_t a = 0; a < n; ++a) {
      if (!alive[a]) continue;
      const PairKey k = key(a, best[a]);
      if (pa == n || k < best_key) {
        best_key = k;
        pa = a;
      }
    }
    std::size_t i = std::min(pa, best[pa]);
    std::size_t j = std::max(pa, best[pa]);
    // Left child is the cluster holding the smaller codepoint.
    if (slots[j].min_cp < slots[i].min_cp) std::swap(i, j);
    const std::size_t keep = std::min(i, j), drop = std::max(i, j);

    const ClusterNode& left = nodes[static_cast<std::size_t>(slots[i].node)];
    const ClusterNode& right = nodes[static_cast<std::size_t>(slots[j].node)];
    ClusterNode merged;
    merged.id = static_cast<int>(nodes.size());
    merged.left = left.id;
    merged.right = right.id;
    merged.height = std::max({std::get<0>(best_key), left.height, right.height});
    merged.members.resize(left.members.size() + right.members.size());
    std::merge(left.members.begin(), left.members.end(), right.members.begin(), right.members.end(),
               merged.members.begin());

    const double ni = static_cast<double>(slots[i].size), nj = static_cast<double>(slots[j].size);
    for (std::size_t k = 0; k < n; ++k) {
      if (!alive[k] || k == i || k == j) continue;
      const auto K = static_cast<Eigen::Index>(k);
      const double dik = dist(static_cast<Eigen::Index>(i), K), djk = dist(static_cast<Eigen::Index>(j), K);
      double d = 0.0;
      switch (linkage) {
        case Linkage::average: d = (ni * dik + nj * djk) / (ni + nj); break;
        case Linkage::complete: d = std::max(dik, djk); break;
        case Linkage::single: d = std::min(dik, djk); break;
      }
      dist(static_cast<Eigen::Index>(keep), K) = d;
      dist(K, static_cast<Eigen::Index>(keep)) = d;
    }

    slots[keep] = {merged.id, std::min(slots[i].min_cp, slots[j].min_cp), slots[i].size + slots[j].size};
    alive[drop] = false;
    nodes.push_back(std::move(merged));

    if (step + 2 == n) break;
    for (std::size_t k = 0; k < n; ++k) {
      if (!alive[k] || k == keep) continue;
      if (best[k] == i || best[k] == j) {
        refresh(k);
      } else if (key(k, keep) < key(k, best[k])) {
        best[k] = keep;
      }
    }
    refresh(keep);
  }
  return ClusterTree(std::move(nodes), table.chars());
}

int parent_cluster(const ClusterTree& tree, int node_id) {
  tree.node(node_id);
  const int parent = tree.parent_of(node_id);
  if (parent == kNoNode) throw DomainError("root cluster has no parent");
  return parent;
}

double cophenetic_distance(const ClusterTree& tree, char32_t a, char32_t b) {
  if (a == b) {
    tree.leaf_of(a);
    return 0.0;
  }
  int x = tree.leaf_of(a);
  tree.leaf_of(b);
  // Climb from a until the ancestor's member set includes b.
  while (true) {
    x = tree.parent_of(x);
    const auto& members = tree.node(x).members;
    if (std::binary_search(members.begin(), members.end(), b)) return tree.node(x).height;
  }
}

char32_t hint_for(const ClusterTree& tree, char32_t target, const CharSet& lexicon_known, Rng& rng,
                  bool randomize_ties) {
  const int ancestor = parent_cluster(tree, tree.leaf_of(target));
  std::vector<char32_t> pool;
  for (char32_t m : tree.node(ancestor).members) {
    if (m != target && lexicon_known.count(m)) pool.push_back(m);
  }
  if (pool.empty()) {
    for (char32_t m : tree.node(ancestor).members) {
      if (m != target) pool.push_back(m);
    }
  }
  const Vector row = tree.cophenetic_row(target);
  double best = std::numeric_limits<double>::infinity();
  std::vector<char32_t> ties;
  for (char32_t m : pool) {  // ascending codepoint
    const double d = row(tree.leaf_of(m));
    if (d < best) {
      best = d;
      ties.assign(1, m);
    } else if (d == best) {
      ties.push_back(m);
    }
  }
  if (randomize_ties && ties.size() > 1) return ties[rng.uniform_index(ties.size())];
  return ties.front();
}

int feedback_level_for_distance(double distance, double root_height, int levels) {
  if (levels < 2) throw DomainError("feedback needs at least 2 levels");
  if (!(root_height > 0.0)) return 1;
  const double scaled = std::floor(static_cast<double>(levels - 1) * distance / root_height);
  const int level = 1 + static_cast<int>(std::clamp(scaled, 0.0, static_cast<double>(levels - 1)));
  return level;
}

int feedback_level(const ClusterTree& tree, char32_t guess, char32_t target, int levels) {
  if (levels < 2) throw DomainError("feedback needs at least 2 levels");
  if (guess == target) return 0;
  return feedback_level_for_distance(cophenetic_distance(tree, guess, target), tree.root_height(), levels);
}

std::vector<char32_t> candidates_at_level(const ClusterTree& tree, char32_t reference, int level, int levels) {
  if (levels < 2) throw DomainError("feedback needs at least 2 levels");
  const Vector row = tree.cophenetic_row(reference);
  const double height = tree.root_height();
  std::vector<char32_t> out;
  for (std::size_t leaf = 0; leaf < tree.leaf_count(); ++leaf) {
    const char32_t c = tree.leaf_chars()[leaf];
    if (c == reference) continue;
    if (feedback_level_for_distance(row(static_cast<Eigen::Index>(leaf)), height, levels) == level) out.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void write_dendrogram(const ClusterTree& tree, std::ostream& out) {
  const auto merges = tree.merges();
  char buf[64];
  for (std::size_t step = 0; step < merges.size(); ++step) {
    std::snprintf(buf, sizeof buf, "%.17g", merges[step].height);
    out << step << ' ' << merges[step].left << ' ' << merges[step].right << ' ' << buf << '\n';
  }
}

}  // namespace ain
