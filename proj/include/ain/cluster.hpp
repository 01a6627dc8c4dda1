#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "ain/embedding.hpp"
#include "ain/rng.hpp"

namespace ain {

enum class Linkage { average, complete, single };

Linkage parse_linkage(const std::string& name);
std::string to_string(Linkage linkage);

inline constexpr int kNoNode = -1;

struct ClusterNode {
  int id = kNoNode;
  std::vector<char32_t> members;  // ascending codepoint
  int left = kNoNode;
  int right = kNoNode;
  double height = 0.0;  // cosine distance of the merge; 0 for leaves

  bool is_leaf() const { return left == kNoNode; }
};

struct Merge {
  int left;
  int right;
  double height;
};

// Agglomerative dendrogram. Leaves are numbered 0..n-1 in table order,
// internal nodes n..2n-2 in merge order; the root is the last node.
class ClusterTree {
 public:
  ClusterTree(std::vector<ClusterNode> nodes, std::vector<char32_t> leaf_chars);

  const std::vector<ClusterNode>& nodes() const { return nodes_; }
  const ClusterNode& node(int id) const;
  int root() const { return static_cast<int>(nodes_.size()) - 1; }
  std::size_t leaf_count() const { return leaf_chars_.size(); }
  const std::vector<char32_t>& leaf_chars() const { return leaf_chars_; }
  double root_height() const { return nodes_.back().height; }

  int leaf_of(char32_t ch) const;
  int parent_of(int id) const { return parent_.at(static_cast<std::size_t>(id)); }
  std::vector<Merge> merges() const;

  // Cophenetic distance from `ch` to every leaf, indexed by leaf id.
  Vector cophenetic_row(char32_t ch) const;

 private:
  std::vector<ClusterNode> nodes_;
  std::vector<char32_t> leaf_chars_;
  std::vector<int> parent_;
  std::unordered_map<char32_t, int> leaf_index_;
};

ClusterTree build_tree(const EmbeddingTable& table, Linkage linkage = Linkage::average);

// Throws DomainError for the root.
int parent_cluster(const ClusterTree& tree, int node_id);

double cophenetic_distance(const ClusterTree& tree, char32_t a, char32_t b);

// Picks the plaintext hint for a newly coined symbol from the smallest
// ancestor of `target` holding another character. Known characters win,
// then cophenetic proximity, then ascending codepoint. With
// `randomize_ties`, exact ties at the final stage are broken by `rng`.
char32_t hint_for(const ClusterTree& tree, char32_t target, const CharSet& lexicon_known, Rng& rng,
                  bool randomize_ties = false);

inline constexpr int kDefaultFeedbackLevels = 4;

// 0 for a correct guess, otherwise 1 + floor((L-1) d / H) clamped to [1, L].
int feedback_level(const ClusterTree& tree, char32_t guess, char32_t target, int levels);
int feedback_level_for_distance(double distance, double root_height, int levels);

// Characters other than `reference` whose feedback against it equals `level`,
// ascending codepoint.
std::vector<char32_t> candidates_at_level(const ClusterTree& tree, char32_t reference, int level,
                                          int levels);

// `<step> <left_id> <right_id> <height>` per merge.
void write_dendrogram(const ClusterTree& tree, std::ostream& out);

}  // namespace ain
