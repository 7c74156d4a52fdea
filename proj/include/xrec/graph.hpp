#pragma once

// Co-author graph, label sets, and candidate records, plus their text loaders.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace xrec {

using NodeIndex = std::uint32_t;

struct Neighbor {
  NodeIndex node;
  double weight;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Undirected weighted simple graph. Adjacency lists are sorted by neighbor
/// index and symmetric; immutable once built.
class ExpertGraph {
 public:
  ExpertGraph() = default;

  std::size_t num_nodes() const { return ids_.size(); }
  std::size_t num_edges() const { return num_edges_; }
  bool empty() const { return ids_.empty(); }

  const std::string& node_id(NodeIndex i) const { return ids_[i]; }
  const std::vector<std::string>& node_ids() const { return ids_; }
  std::optional<NodeIndex> find(const std::string& id) const;
  NodeIndex index_of(const std::string& id) const;

  std::span<const Neighbor> neighbors(NodeIndex i) const { return adjacency_[i]; }
  std::size_t degree(NodeIndex i) const { return adjacency_[i].size(); }
  bool is_isolated(NodeIndex i) const { return adjacency_[i].empty(); }
  std::optional<double> weight(NodeIndex u, NodeIndex v) const;
  bool has_edge(NodeIndex u, NodeIndex v) const { return weight(u, v).has_value(); }

  /// Self-loops seen (and dropped) while building.
  std::size_t dropped_self_loops() const { return dropped_self_loops_; }

 private:
  friend class GraphBuilder;

  std::vector<std::string> ids_;
  std::unordered_map<std::string, NodeIndex> index_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::size_t num_edges_ = 0;
  std::size_t dropped_self_loops_ = 0;
};

/// Accumulates nodes and edges. Duplicate edges are merged by summing weights;
/// self-loops are counted and dropped.
class GraphBuilder {
 public:
  NodeIndex add_node(const std::string& id);
  void add_edge(const std::string& a, const std::string& b, double weight = 1.0);
  void add_edge(NodeIndex a, NodeIndex b, double weight = 1.0);
  ExpertGraph build() &&;

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, NodeIndex> index_;
  std::vector<std::map<NodeIndex, double>> adjacency_;
  std::size_t dropped_self_loops_ = 0;
};

/// Parses `src dst [weight]` lines (tab or space separated, `#` comments).
/// A line with a single token declares an isolated node.
ExpertGraph parse_edge_list(const std::string& contents, const std::string& source = "<edges>");
ExpertGraph load_edge_list(const std::filesystem::path& path);

/// Writes each undirected edge once (lower index first) at full precision.
std::string format_edge_list(const ExpertGraph& graph);
void save_edge_list(const ExpertGraph& graph, const std::filesystem::path& path);

/// Multi-hot subject-area vector of fixed width C.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::size_t num_classes) : bits_(num_classes, 0) {}
  static LabelSet from_indices(std::size_t num_classes, std::initializer_list<std::size_t> on);

  std::size_t size() const { return bits_.size(); }
  bool test(std::size_t c) const { return bits_[c] != 0; }
  void set(std::size_t c, bool on = true) { bits_[c] = on ? 1 : 0; }
  std::size_t count() const;
  bool none() const { return count() == 0; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  /// Dense 0/1 column, the training target layout.
  Eigen::VectorXd as_vector() const;

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

struct LabelTable {
  std::vector<std::string> vocabulary;  // class index -> label name
  std::map<std::string, LabelSet> labels;
  std::vector<std::string> skipped;    // nodes absent from the graph
  std::vector<std::string> empty;      // nodes with an empty label field

  std::size_t num_classes() const { return vocabulary.size(); }
};

/// `node<TAB>label,label,...`. The vocabulary is the sorted set of label names
/// unless `fixed_vocabulary` is given. If `graph` is non-null, unknown nodes
/// are reported in `skipped` instead of being loaded.
LabelTable parse_labels(const std::string& contents, const ExpertGraph* graph = nullptr,
                        const std::vector<std::string>* fixed_vocabulary = nullptr,
                        const std::string& source = "<labels>");
LabelTable load_labels(const std::filesystem::path& path, const ExpertGraph* graph = nullptr,
                       const std::vector<std::string>* fixed_vocabulary = nullptr);
std::string format_labels(const LabelTable& table);

/// `node<TAB>integer` h-index file.
std::map<std::string, std::int64_t> parse_hindex(const std::string& contents,
                                                 const std::string& source = "<hindex>");
std::map<std::string, std::int64_t> load_hindex(const std::filesystem::path& path);

/// Min-max normalization to [0,1]; all zeros when every value is equal.
std::map<std::string, double> normalize_hindex(const std::map<std::string, std::int64_t>& values);

struct CandidateRecord {
  std::string node_id;
  LabelSet labels;
  std::int64_t h_index_raw = 0;
  std::optional<std::vector<std::vector<std::string>>> documents;
  std::optional<Eigen::VectorXd> doc_embedding;

  bool has_text() const { return documents.has_value() || doc_embedding.has_value(); }
};

/// Documents file: one article per line, whitespace-separated tokens.
std::vector<std::vector<std::string>> parse_documents(const std::string& contents);
std::string format_documents(const std::vector<std::vector<std::string>>& docs);

/// `node<TAB>path` manifest; relative paths resolve against the manifest's directory.
std::map<std::string, std::filesystem::path> load_document_manifest(const std::filesystem::path& path);

}  // namespace xrec
