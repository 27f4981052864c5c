#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

namespace gfair {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Malformed input files and violated graph invariants.
class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Split { kTrain, kVal, kTest };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view text);

// Unordered node pair in canonical orientation (u < v).
struct NodePair {
  int u = 0;
  int v = 0;

  friend auto operator<=>(const NodePair&, const NodePair&) = default;
};

// Throws std::invalid_argument when a == b.
NodePair canonical_pair(int a, int b);

inline std::uint64_t pair_key(NodePair p) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.u)) << 32) |
         static_cast<std::uint32_t>(p.v);
}

inline NodePair pair_from_key(std::uint64_t key) {
  return {static_cast<int>(key >> 32), static_cast<int>(key & 0xffffffffu)};
}

// Set of canonical pairs with O(1) membership.
class PairSet {
 public:
  bool contains(NodePair p) const { return keys_.count(pair_key(p)) > 0; }
  bool insert(NodePair p) { return keys_.insert(pair_key(p)).second; }
  bool erase(NodePair p) { return keys_.erase(pair_key(p)) > 0; }
  std::size_t size() const { return keys_.size(); }
  bool empty() const { return keys_.empty(); }

 private:
  std::unordered_set<std::uint64_t> keys_;
};

enum class FlipKind { kAdd, kRemove };

std::string_view to_string(FlipKind kind);

struct EdgeFlip {
  int u = 0;
  int v = 0;
  FlipKind kind = FlipKind::kAdd;
  int iteration = 0;

  NodePair pair() const { return {u, v}; }
  friend bool operator==(const EdgeFlip&, const EdgeFlip&) = default;
};

// Undirected attributed graph with binary labels, binary sensitive attribute
// and a train/val/test split. Adjacency is kept both as sorted neighbor lists
// and as a hash set of canonical pairs.
class Graph {
 public:
  // Validates every invariant and throws GraphError naming the violated one.
  Graph(int num_nodes, const std::vector<NodePair>& edges, RowMatrix features,
        std::vector<std::optional<int>> labels, std::vector<int> sensitive,
        std::vector<Split> split);

  int num_nodes() const { return num_nodes_; }
  int num_edges() const { return static_cast<int>(edge_keys_.size()); }
  int feature_dim() const { return static_cast<int>(features_.cols()); }

  bool has_edge(int u, int v) const;
  const std::vector<int>& neighbors(int u) const { return adjacency_[u]; }
  int degree(int u) const { return static_cast<int>(adjacency_[u].size()); }

  // Canonical edges in lexicographic order.
  std::vector<NodePair> edges() const;

  const RowMatrix& features() const { return features_; }
  const std::vector<std::optional<int>>& labels() const { return labels_; }
  const std::optional<int>& label(int i) const { return labels_[i]; }
  const std::vector<int>& sensitive() const { return sensitive_; }
  int sensitive(int i) const { return sensitive_[i]; }
  const std::vector<Split>& split() const { return split_; }
  Split split(int i) const { return split_[i]; }

  std::vector<int> nodes_in(Split split) const;
  std::vector<int> all_nodes() const;

  // In-place toggle of (u,v). Callers own exclusive access; this is the
  // single-writer commit path used by the attack state.
  void toggle_edge(int u, int v);

  // Symmetry, no self-loops and hash-set/list agreement.
  bool structure_is_valid() const;

  // Same node data, different edge set.
  Graph with_edges(const std::vector<NodePair>& edges) const;

 private:
  void validate() const;
  void insert_edge(int u, int v);

  int num_nodes_ = 0;
  std::vector<std::vector<int>> adjacency_;
  std::unordered_set<std::uint64_t> edge_keys_;
  RowMatrix features_;
  std::vector<std::optional<int>> labels_;
  std::vector<int> sensitive_;
  std::vector<Split> split_;
};

bool structurally_equal(const Graph& a, const Graph& b);

// Nodes CSV: `id,sensitive,label,split,f0,...`; edges TSV: `u<TAB>v`.
Graph load_graph(const std::string& nodes_path, const std::string& edges_path);
void save_graph(const Graph& graph, const std::string& nodes_path,
                const std::string& edges_path);

// Returns a copy of `graph` with the (u,v) entry toggled.
Graph flip_edge(const Graph& graph, int u, int v);

// Canonical flip of (u,v) against the current adjacency.
EdgeFlip make_flip(const Graph& graph, int u, int v, int iteration = 0);

// False iff the flip removes an edge and leaves u or v without neighbors.
bool check_feasible(const Graph& graph, const EdgeFlip& flip);
bool flip_is_feasible(const Graph& graph, int u, int v);

enum class EdgeGroup { kEE, kED, kDE, kDD };

std::string_view to_string(EdgeGroup group);

// First letter: same/different label. Second: same/different sensitive value.
EdgeGroup classify_edge_group(const Graph& graph, int u, int v);

}  // namespace gfair
