#include "xrec/graph.hpp"

#include <algorithm>
#include <iostream>
#include <set>
#include <sstream>

#include "xrec/error.hpp"
#include "xrec/text.hpp"

namespace xrec {

std::optional<NodeIndex> ExpertGraph::find(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeIndex ExpertGraph::index_of(const std::string& id) const {
  const auto i = find(id);
  if (!i) throw LookupError("unknown node '" + id + "'");
  return *i;
}

std::optional<double> ExpertGraph::weight(NodeIndex u, NodeIndex v) const {
  const auto& adj = adjacency_[u];
  const auto it = std::lower_bound(adj.begin(), adj.end(), v,
                                   [](const Neighbor& n, NodeIndex x) { return n.node < x; });
  if (it == adj.end() || it->node != v) return std::nullopt;
  return it->weight;
}

NodeIndex GraphBuilder::add_node(const std::string& id) {
  const auto [it, inserted] = index_.try_emplace(id, static_cast<NodeIndex>(ids_.size()));
  if (inserted) {
    ids_.push_back(id);
    adjacency_.emplace_back();
  }
  return it->second;
}

void GraphBuilder::add_edge(const std::string& a, const std::string& b, double weight) {
  const auto u = add_node(a);
  const auto v = add_node(b);
  add_edge(u, v, weight);
}

void GraphBuilder::add_edge(NodeIndex a, NodeIndex b, double weight) {
  if (!(weight > 0.0)) throw ValidationError("edge weight must be positive");
  if (a >= ids_.size() || b >= ids_.size()) throw ValidationError("edge endpoint out of range");
  if (a == b) {
    ++dropped_self_loops_;
    return;
  }
  adjacency_[a][b] += weight;
  adjacency_[b][a] += weight;
}

ExpertGraph GraphBuilder::build() && {
  ExpertGraph g;
  g.ids_ = std::move(ids_);
  g.index_ = std::move(index_);
  g.adjacency_.resize(g.ids_.size());
  std::size_t half_edges = 0;
  for (std::size_t i = 0; i < adjacency_.size(); ++i) {
    auto& out = g.adjacency_[i];
    out.reserve(adjacency_[i].size());
    for (const auto& [v, w] : adjacency_[i]) out.push_back({v, w});
    half_edges += out.size();
  }
  g.num_edges_ = half_edges / 2;
  g.dropped_self_loops_ = dropped_self_loops_;
  return g;
}

ExpertGraph parse_edge_list(const std::string& contents, const std::string& source) {
  GraphBuilder builder;
  std::istringstream in(contents);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::is_blank_or_comment(line)) continue;
    const auto fields = text::split_ws(line);
    if (fields.size() == 1) {
      builder.add_node(std::string(fields[0]));
      continue;
    }
    if (fields.size() > 3) throw ParseError(source, line_no, "expected 'src dst [weight]'");
    double w = 1.0;
    if (fields.size() == 3) {
      w = text::parse_double(fields[2], source, line_no);
      if (!(w > 0.0)) throw ParseError(source, line_no, "edge weight must be positive");
    }
    builder.add_edge(std::string(fields[0]), std::string(fields[1]), w);
  }
  auto graph = std::move(builder).build();
  if (graph.empty()) throw ValidationError(source + ": empty graph");
  if (graph.dropped_self_loops() > 0) {
    std::cerr << "warning: " << source << ": dropped " << graph.dropped_self_loops()
              << " self-loop(s)\n";
  }
  return graph;
}

ExpertGraph load_edge_list(const std::filesystem::path& path) {
  return parse_edge_list(text::read_file(path), path.string());
}

std::string format_edge_list(const ExpertGraph& graph) {
  std::ostringstream out;
  out << "# nodes=" << graph.num_nodes() << " edges=" << graph.num_edges() << '\n';
  for (NodeIndex u = 0; u < graph.num_nodes(); ++u) {
    if (graph.is_isolated(u)) {
      out << graph.node_id(u) << '\n';
      continue;
    }
    for (const auto& n : graph.neighbors(u)) {
      if (n.node <= u) continue;
      out << graph.node_id(u) << '\t' << graph.node_id(n.node) << '\t'
          << text::format_g(n.weight, 17) << '\n';
    }
  }
  return out.str();
}

void save_edge_list(const ExpertGraph& graph, const std::filesystem::path& path) {
  text::write_file(path, format_edge_list(graph));
}

LabelSet LabelSet::from_indices(std::size_t num_classes, std::initializer_list<std::size_t> on) {
  LabelSet s(num_classes);
  for (auto c : on) s.set(c);
  return s;
}

std::size_t LabelSet::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

Eigen::VectorXd LabelSet::as_vector() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(bits_.size()));
  for (std::size_t i = 0; i < bits_.size(); ++i) v(static_cast<Eigen::Index>(i)) = bits_[i];
  return v;
}

LabelTable parse_labels(const std::string& contents, const ExpertGraph* graph,
                        const std::vector<std::string>* fixed_vocabulary,
                        const std::string& source) {
  struct Row {
    std::string node;
    std::vector<std::string> labels;
  };
  std::vector<Row> rows;
  std::set<std::string> names;
  std::istringstream in(contents);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::is_blank_or_comment(line)) continue;
    const auto tab = line.find('\t');
    Row row;
    std::string_view rest;
    if (tab == std::string::npos) {
      const auto fields = text::split_ws(line);
      if (fields.size() > 2) throw ParseError(source, line_no, "expected 'node<TAB>labels'");
      row.node = std::string(fields[0]);
      if (fields.size() == 2) rest = fields[1];
    } else {
      row.node = std::string(text::trim(std::string_view(line).substr(0, tab)));
      rest = text::trim(std::string_view(line).substr(tab + 1));
    }
    if (row.node.empty()) throw ParseError(source, line_no, "missing node id");
    for (auto part : text::split(rest, ',')) {
      const auto name = text::trim(part);
      if (name.empty()) continue;
      row.labels.emplace_back(name);
      names.emplace(name);
    }
    rows.push_back(std::move(row));
  }

  LabelTable table;
  if (fixed_vocabulary) {
    table.vocabulary = *fixed_vocabulary;
  } else {
    table.vocabulary.assign(names.begin(), names.end());
  }
  std::map<std::string, std::size_t> class_of;
  for (std::size_t c = 0; c < table.vocabulary.size(); ++c) class_of[table.vocabulary[c]] = c;

  for (const auto& row : rows) {
    if (graph && !graph->find(row.node)) {
      table.skipped.push_back(row.node);
      continue;
    }
    LabelSet set(table.vocabulary.size());
    for (const auto& name : row.labels) {
      const auto it = class_of.find(name);
      if (it == class_of.end()) {
        throw ValidationError(source + ": label '" + name + "' not in vocabulary");
      }
      set.set(it->second);
    }
    if (set.none()) table.empty.push_back(row.node);
    auto [pos, inserted] = table.labels.emplace(row.node, set);
    if (!inserted) {
      for (std::size_t c = 0; c < set.size(); ++c) {
        if (set.test(c)) pos->second.set(c);
      }
    }
  }
  if (!table.empty.empty()) {
    std::cerr << "warning: " << source << ": " << table.empty.size()
              << " node(s) with empty label field\n";
  }
  return table;
}

LabelTable load_labels(const std::filesystem::path& path, const ExpertGraph* graph,
                       const std::vector<std::string>* fixed_vocabulary) {
  return parse_labels(text::read_file(path), graph, fixed_vocabulary, path.string());
}

std::string format_labels(const LabelTable& table) {
  std::ostringstream out;
  for (const auto& [node, set] : table.labels) {
    out << node << '\t';
    bool first = true;
    for (std::size_t c = 0; c < set.size(); ++c) {
      if (!set.test(c)) continue;
      if (!first) out << ',';
      out << table.vocabulary[c];
      first = false;
    }
    out << '\n';
  }
  return out.str();
}

std::map<std::string, std::int64_t> parse_hindex(const std::string& contents,
                                                 const std::string& source) {
  std::map<std::string, std::int64_t> out;
  std::istringstream in(contents);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::is_blank_or_comment(line)) continue;
    const auto fields = text::split_ws(line);
    if (fields.size() != 2) throw ParseError(source, line_no, "expected 'node<TAB>h-index'");
    out[std::string(fields[0])] = text::parse_int(fields[1], source, line_no);
  }
  return out;
}

std::map<std::string, std::int64_t> load_hindex(const std::filesystem::path& path) {
  return parse_hindex(text::read_file(path), path.string());
}

std::map<std::string, double> normalize_hindex(const std::map<std::string, std::int64_t>& values) {
  if (values.empty()) throw ValidationError("normalize_hindex: empty input");
  std::int64_t lo = values.begin()->second;
  std::int64_t hi = lo;
  for (const auto& [id, h] : values) {
    if (h < 0) throw ValidationError("negative h-index for '" + id + "'");
    lo = std::min(lo, h);
    hi = std::max(hi, h);
  }
  std::map<std::string, double> out;
  const double span = static_cast<double>(hi - lo);
  for (const auto& [id, h] : values) {
    out[id] = hi == lo ? 0.0 : static_cast<double>(h - lo) / span;
  }
  return out;
}

std::vector<std::vector<std::string>> parse_documents(const std::string& contents) {
  std::vector<std::vector<std::string>> docs;
  std::istringstream in(contents);
  std::string line;
  while (std::getline(in, line)) {
    const auto tokens = text::split_ws(line);
    if (tokens.empty()) continue;
    docs.emplace_back(tokens.begin(), tokens.end());
  }
  return docs;
}

std::string format_documents(const std::vector<std::vector<std::string>>& docs) {
  std::string out;
  for (const auto& doc : docs) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (i) out += ' ';
      out += doc[i];
    }
    out += '\n';
  }
  return out;
}

std::map<std::string, std::filesystem::path> load_document_manifest(
    const std::filesystem::path& path) {
  const auto contents = text::read_file(path);
  const auto base = path.parent_path();
  std::map<std::string, std::filesystem::path> out;
  std::istringstream in(contents);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::is_blank_or_comment(line)) continue;
    const auto fields = text::split(text::trim(line), '\t');
    if (fields.size() != 2) throw ParseError(path.string(), line_no, "expected 'node<TAB>path'");
    std::filesystem::path p{std::string(text::trim(fields[1]))};
    if (p.is_relative()) p = base / p;
    out[std::string(text::trim(fields[0]))] = p;
  }
  return out;
}

}  // namespace xrec
