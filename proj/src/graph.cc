#include "gfair/graph.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "gfair/io_util.h"

namespace gfair {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  if constexpr (std::is_floating_point_v<T>) {
    // from_chars rejects a leading '+'.
    if (*begin == '+') ++begin;
  }
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

[[noreturn]] void parse_failure(const std::string& path, int line,
                                const std::string& what) {
  throw GraphError(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  return std::nullopt;
}

std::string_view to_string(FlipKind kind) {
  return kind == FlipKind::kAdd ? "add" : "remove";
}

std::string_view to_string(EdgeGroup group) {
  switch (group) {
    case EdgeGroup::kEE: return "EE";
    case EdgeGroup::kED: return "ED";
    case EdgeGroup::kDE: return "DE";
    case EdgeGroup::kDD: return "DD";
  }
  return "?";
}

NodePair canonical_pair(int a, int b) {
  if (a == b) {
    throw std::invalid_argument("self-loop pair (" + std::to_string(a) + "," +
                                std::to_string(b) + ")");
  }
  return a < b ? NodePair{a, b} : NodePair{b, a};
}

Graph::Graph(int num_nodes, const std::vector<NodePair>& edges,
             RowMatrix features, std::vector<std::optional<int>> labels,
             std::vector<int> sensitive, std::vector<Split> split)
    : num_nodes_(num_nodes),
      adjacency_(num_nodes > 0 ? num_nodes : 0),
      features_(std::move(features)),
      labels_(std::move(labels)),
      sensitive_(std::move(sensitive)),
      split_(std::move(split)) {
  if (num_nodes <= 0) throw GraphError("graph must have at least one node");
  if (features_.rows() != num_nodes || labels_.size() != std::size_t(num_nodes) ||
      sensitive_.size() != std::size_t(num_nodes) ||
      split_.size() != std::size_t(num_nodes)) {
    throw GraphError("node attribute arrays disagree with node count");
  }
  for (const NodePair& e : edges) {
    if (e.u == e.v) {
      throw GraphError("self-loop on node " + std::to_string(e.u));
    }
    if (e.u < 0 || e.v < 0 || e.u >= num_nodes || e.v >= num_nodes) {
      throw GraphError("edge (" + std::to_string(e.u) + "," +
                       std::to_string(e.v) + ") references unknown node");
    }
    if (!has_edge(e.u, e.v)) insert_edge(e.u, e.v);
  }
  validate();
}

void Graph::validate() const {
  bool has_group[2] = {false, false};
  bool has_test_group[2] = {false, false};
  for (int i = 0; i < num_nodes_; ++i) {
    const int s = sensitive_[i];
    if (s != 0 && s != 1) {
      throw GraphError("sensitive value of node " + std::to_string(i) +
                       " is not in {0,1}");
    }
    if (labels_[i] && *labels_[i] != 0 && *labels_[i] != 1) {
      throw GraphError("label of node " + std::to_string(i) +
                       " is not in {0,1,unlabeled}");
    }
    if (split_[i] == Split::kTrain && !labels_[i]) {
      throw GraphError("train node " + std::to_string(i) + " is unlabeled");
    }
    has_group[s] = true;
    if (split_[i] == Split::kTest) has_test_group[s] = true;
  }
  if (!has_group[0] || !has_group[1]) throw GraphError("empty sensitive group");
  if (!has_test_group[0] || !has_test_group[1]) {
    throw GraphError("sensitive group with no test nodes");
  }
  if (!features_.allFinite()) throw GraphError("non-finite attribute value");
}

bool Graph::has_edge(int u, int v) const {
  if (u == v) return false;
  return edge_keys_.count(pair_key(canonical_pair(u, v))) > 0;
}

void Graph::insert_edge(int u, int v) {
  edge_keys_.insert(pair_key(canonical_pair(u, v)));
  auto& nu = adjacency_[u];
  nu.insert(std::lower_bound(nu.begin(), nu.end(), v), v);
  auto& nv = adjacency_[v];
  nv.insert(std::lower_bound(nv.begin(), nv.end(), u), u);
}

void Graph::toggle_edge(int u, int v) {
  const NodePair p = canonical_pair(u, v);
  if (p.u < 0 || p.v >= num_nodes_) {
    throw std::out_of_range("toggle_edge: node id out of range");
  }
  if (edge_keys_.erase(pair_key(p)) > 0) {
    auto& nu = adjacency_[u];
    nu.erase(std::lower_bound(nu.begin(), nu.end(), v));
    auto& nv = adjacency_[v];
    nv.erase(std::lower_bound(nv.begin(), nv.end(), u));
  } else {
    insert_edge(u, v);
  }
}

std::vector<NodePair> Graph::edges() const {
  std::vector<NodePair> out;
  out.reserve(edge_keys_.size());
  for (int u = 0; u < num_nodes_; ++u) {
    for (int v : adjacency_[u]) {
      if (u < v) out.push_back({u, v});
    }
  }
  return out;
}

std::vector<int> Graph::nodes_in(Split s) const {
  std::vector<int> out;
  for (int i = 0; i < num_nodes_; ++i) {
    if (split_[i] == s) out.push_back(i);
  }
  return out;
}

std::vector<int> Graph::all_nodes() const {
  std::vector<int> out(num_nodes_);
  for (int i = 0; i < num_nodes_; ++i) out[i] = i;
  return out;
}

bool Graph::structure_is_valid() const {
  std::size_t half_edges = 0;
  for (int u = 0; u < num_nodes_; ++u) {
    const auto& nu = adjacency_[u];
    if (!std::is_sorted(nu.begin(), nu.end())) return false;
    if (std::adjacent_find(nu.begin(), nu.end()) != nu.end()) return false;
    for (int v : nu) {
      if (v == u || v < 0 || v >= num_nodes_) return false;
      const auto& nv = adjacency_[v];
      if (!std::binary_search(nv.begin(), nv.end(), u)) return false;
      if (edge_keys_.count(pair_key(canonical_pair(u, v))) == 0) return false;
    }
    half_edges += nu.size();
  }
  return half_edges == 2 * edge_keys_.size();
}

Graph Graph::with_edges(const std::vector<NodePair>& edges) const {
  return Graph(num_nodes_, edges, features_, labels_, sensitive_, split_);
}

bool structurally_equal(const Graph& a, const Graph& b) {
  return a.num_nodes() == b.num_nodes() && a.edges() == b.edges();
}

Graph load_graph(const std::string& nodes_path, const std::string& edges_path) {
  std::ifstream nodes_in(nodes_path);
  if (!nodes_in) throw GraphError("cannot open nodes file " + nodes_path);

  std::string line;
  int line_no = 1;
  if (!std::getline(nodes_in, line)) parse_failure(nodes_path, 1, "missing header");
  const auto header = split_fields(trim(line), ',');
  if (header.size() < 4 || trim(header[0]) != "id" ||
      trim(header[1]) != "sensitive" || trim(header[2]) != "label" ||
      trim(header[3]) != "split") {
    parse_failure(nodes_path, 1, "header must start with id,sensitive,label,split");
  }
  const int feature_dim = static_cast<int>(header.size()) - 4;
  for (int f = 0; f < feature_dim; ++f) {
    if (trim(header[4 + f]) != "f" + std::to_string(f)) {
      parse_failure(nodes_path, 1, "feature column " + std::to_string(f) +
                                       " must be named f" + std::to_string(f));
    }
  }

  struct Row {
    int id;
    int sensitive;
    int label;
    Split split;
    std::vector<double> features;
  };
  std::vector<Row> rows;
  while (std::getline(nodes_in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(trim(line), ',');
    if (fields.size() != header.size()) {
      parse_failure(nodes_path, line_no,
                    "expected " + std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    }
    Row row;
    if (!parse_number(fields[0], row.id) || row.id < 0) {
      parse_failure(nodes_path, line_no, "bad node id '" + fields[0] + "'");
    }
    if (!parse_number(fields[1], row.sensitive) ||
        (row.sensitive != 0 && row.sensitive != 1)) {
      parse_failure(nodes_path, line_no, "sensitive must be 0 or 1");
    }
    if (!parse_number(fields[2], row.label) ||
        (row.label != 0 && row.label != 1 && row.label != -1)) {
      parse_failure(nodes_path, line_no, "label must be 0, 1 or -1");
    }
    const auto split = parse_split(trim(fields[3]));
    if (!split) parse_failure(nodes_path, line_no, "split must be train, val or test");
    row.split = *split;
    row.features.resize(feature_dim);
    for (int f = 0; f < feature_dim; ++f) {
      if (!parse_number(fields[4 + f], row.features[f])) {
        parse_failure(nodes_path, line_no, "bad attribute f" + std::to_string(f));
      }
    }
    rows.push_back(std::move(row));
  }

  const int n = static_cast<int>(rows.size());
  if (n == 0) throw GraphError(nodes_path + ": no nodes");
  std::vector<bool> seen(n, false);
  RowMatrix features(n, feature_dim);
  std::vector<std::optional<int>> labels(n);
  std::vector<int> sensitive(n);
  std::vector<Split> split(n);
  for (const Row& row : rows) {
    if (row.id >= n || seen[row.id]) {
      throw GraphError(nodes_path + ": node ids must be a permutation of 0.." +
                       std::to_string(n - 1));
    }
    seen[row.id] = true;
    for (int f = 0; f < feature_dim; ++f) features(row.id, f) = row.features[f];
    if (row.label >= 0) labels[row.id] = row.label;
    sensitive[row.id] = row.sensitive;
    split[row.id] = row.split;
  }

  std::ifstream edges_in(edges_path);
  if (!edges_in) throw GraphError("cannot open edges file " + edges_path);
  std::vector<NodePair> edges;
  line_no = 0;
  while (std::getline(edges_in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto fields = split_fields(t, '\t');
    int u = 0;
    int v = 0;
    if (fields.size() != 2 || !parse_number(fields[0], u) ||
        !parse_number(fields[1], v)) {
      parse_failure(edges_path, line_no, "expected 'u<TAB>v'");
    }
    if (u == v) parse_failure(edges_path, line_no, "self-loop on node " + std::to_string(u));
    if (u < 0 || v < 0 || u >= n || v >= n) {
      parse_failure(edges_path, line_no, "node id out of range");
    }
    edges.push_back(canonical_pair(u, v));
  }

  return Graph(n, edges, std::move(features), std::move(labels),
               std::move(sensitive), std::move(split));
}

void save_graph(const Graph& graph, const std::string& nodes_path,
                const std::string& edges_path) {
  std::ostringstream nodes;
  nodes << "id,sensitive,label,split";
  for (int f = 0; f < graph.feature_dim(); ++f) nodes << ",f" << f;
  nodes << '\n';
  for (int i = 0; i < graph.num_nodes(); ++i) {
    nodes << i << ',' << graph.sensitive(i) << ','
          << (graph.label(i) ? *graph.label(i) : -1) << ','
          << to_string(graph.split(i));
    for (int f = 0; f < graph.feature_dim(); ++f) {
      nodes << ',' << format_double(graph.features()(i, f));
    }
    nodes << '\n';
  }
  std::ostringstream edges;
  for (const NodePair& e : graph.edges()) edges << e.u << '\t' << e.v << '\n';
  write_file_atomic(nodes_path, nodes.str());
  write_file_atomic(edges_path, edges.str());
}

Graph flip_edge(const Graph& graph, int u, int v) {
  if (u == v) throw std::invalid_argument("cannot flip a self-loop");
  Graph out = graph;
  out.toggle_edge(u, v);
  return out;
}

EdgeFlip make_flip(const Graph& graph, int u, int v, int iteration) {
  const NodePair p = canonical_pair(u, v);
  return {p.u, p.v, graph.has_edge(p.u, p.v) ? FlipKind::kRemove : FlipKind::kAdd,
          iteration};
}

bool check_feasible(const Graph& graph, const EdgeFlip& flip) {
  if (flip.kind == FlipKind::kAdd) return true;
  return graph.degree(flip.u) > 1 && graph.degree(flip.v) > 1;
}

bool flip_is_feasible(const Graph& graph, int u, int v) {
  if (!graph.has_edge(u, v)) return true;
  return graph.degree(u) > 1 && graph.degree(v) > 1;
}

EdgeGroup classify_edge_group(const Graph& graph, int u, int v) {
  const auto& lu = graph.label(u);
  const auto& lv = graph.label(v);
  if (!lu || !lv) {
    throw std::invalid_argument("edge group needs labeled endpoints; node " +
                                std::to_string(!lu ? u : v) + " is unlabeled");
  }
  const bool same_label = *lu == *lv;
  const bool same_sensitive = graph.sensitive(u) == graph.sensitive(v);
  if (same_label) return same_sensitive ? EdgeGroup::kEE : EdgeGroup::kED;
  return same_sensitive ? EdgeGroup::kDE : EdgeGroup::kDD;
}

}  // namespace gfair
