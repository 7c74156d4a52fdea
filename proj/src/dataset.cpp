#include "xrec/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "xrec/embedding_io.hpp"
#include "xrec/error.hpp"
#include "xrec/text.hpp"

namespace xrec {

void SynthConfig::validate() const {
  if (communities < 2) throw ValidationError("synth: communities must be >= 2");
  if (nodes < communities) throw ValidationError("synth: nodes must be >= communities");
  const std::size_t c = num_labels == 0 ? 2 * communities : num_labels;
  if (c < 2 * communities) throw ValidationError("synth: num_labels must be >= 2 * communities");
  if (labels_per_node < 1 || labels_per_node > c) {
    throw ValidationError("synth: labels_per_node must be in [1, num_labels]");
  }
  if (doc_signal < 0.0 || doc_signal > 1.0) throw ValidationError("synth: doc_signal in [0,1]");
  if (text_fraction < 0.0 || text_fraction > 1.0) {
    throw ValidationError("synth: text_fraction in [0,1]");
  }
  if (intra_degree < 0.0 || inter_degree < 0.0) throw ValidationError("synth: negative degree");
  if (doc_dim < 1 || doc_vocab < 3) throw ValidationError("synth: doc_dim >= 1, doc_vocab >= 3");
}

Dataset synth_dataset(const SynthConfig& config) {
  config.validate();
  const std::size_t n = config.nodes;
  const std::size_t k = config.communities;
  const std::size_t num_classes = config.num_labels == 0 ? 2 * k : config.num_labels;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> community(n);
  for (std::size_t pos = 0; pos < n; ++pos) community[order[pos]] = static_cast<int>(pos % k);

  std::vector<std::size_t> sizes(k, 0);
  for (int c : community) ++sizes[static_cast<std::size_t>(c)];
  const double min_size = static_cast<double>(*std::min_element(sizes.begin(), sizes.end()));
  const double p_in = min_size > 1 ? std::min(1.0, config.intra_degree / (min_size - 1)) : 0.0;
  const double p_out = std::min(1.0, config.inter_degree / static_cast<double>(n - n / k));

  GraphBuilder builder;
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    ids[i] = "v" + std::to_string(i);
    builder.add_node(ids[i]);
  }
  std::poisson_distribution<int> extra_weight(0.5);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      const double p = community[u] == community[v] ? p_in : p_out;
      if (p > 0.0 && unit(rng) < p) {
        builder.add_edge(static_cast<NodeIndex>(u), static_cast<NodeIndex>(v),
                         1.0 + extra_weight(rng));
      }
    }
  }

  Dataset data;
  data.graph = std::move(builder).build();
  for (std::size_t c = 0; c < num_classes; ++c) {
    char name[32];
    std::snprintf(name, sizeof name, "area%02zu", c);
    data.label_vocabulary.emplace_back(name);
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd direction(static_cast<Eigen::Index>(config.doc_dim));
  for (Eigen::Index i = 0; i < direction.size(); ++i) direction(i) = gauss(rng);
  direction.normalize();
  const double noise_scale = config.doc_noise / std::sqrt(static_cast<double>(config.doc_dim));

  const std::size_t pool = config.doc_vocab / 3;
  std::uniform_int_distribution<std::size_t> pick_word(0, pool - 1);
  std::vector<std::size_t> other_classes;

  std::vector<std::size_t> by_id(n);
  std::iota(by_id.begin(), by_id.end(), std::size_t{0});
  std::sort(by_id.begin(), by_id.end(), [&](auto a, auto b) { return ids[a] < ids[b]; });
  std::vector<CandidateRecord> records(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& rec = records[i];
    rec.node_id = ids[i];
    const bool positive = unit(rng) < 0.5;
    const std::size_t comm = config.graph_signal ? static_cast<std::size_t>(community[i]) : 0;
    const std::size_t primary = 2 * comm + (positive ? 1 : 0);
    rec.labels = LabelSet(num_classes);
    rec.labels.set(primary);
    other_classes.clear();
    for (std::size_t c = 0; c < num_classes; ++c) {
      if (c != primary) other_classes.push_back(c);
    }
    std::shuffle(other_classes.begin(), other_classes.end(), rng);
    for (std::size_t j = 0; j + 1 < config.labels_per_node; ++j) rec.labels.set(other_classes[j]);

    const double lambda = 2.0 + 0.8 * static_cast<double>(data.graph.degree(static_cast<NodeIndex>(i)));
    rec.h_index_raw = std::poisson_distribution<std::int64_t>(lambda)(rng);

    const bool has_text = unit(rng) < config.text_fraction;
    const double sign = positive ? 1.0 : -1.0;
    Eigen::VectorXd vec(direction.size());
    for (Eigen::Index d = 0; d < vec.size(); ++d) vec(d) = noise_scale * gauss(rng);
    vec += config.doc_signal * sign * direction;
    std::vector<std::vector<std::string>> docs(config.docs_per_node);
    for (auto& doc : docs) {
      doc.reserve(config.doc_length);
      for (std::size_t t = 0; t < config.doc_length; ++t) {
        std::size_t offset = 2 * pool;  // neutral pool
        if (unit(rng) < 0.5) {
          const bool own = unit(rng) < 0.5 + 0.5 * config.doc_signal;
          offset = (own == positive) ? 0 : pool;
        }
        doc.push_back("w" + std::to_string(offset + pick_word(rng)));
      }
    }
    if (has_text) {
      rec.doc_embedding = std::move(vec);
      rec.documents = std::move(docs);
    }
  }

  for (auto i : by_id) {
    data.candidates.push_back(std::move(records[i]));
    data.groups.push_back(community[i]);
  }
  return data;
}

DatasetPaths DatasetPaths::in_directory(const std::filesystem::path& dir) {
  return {dir / "graph.tsv",     dir / "labels.tsv",      dir / "hindex.tsv",
          dir / "documents.tsv", dir / "doc_vectors.emb", dir / "groups.tsv"};
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  const auto paths = DatasetPaths::in_directory(dir);
  std::filesystem::create_directories(dir);
  save_edge_list(dataset.graph, paths.edges);

  LabelTable table;
  table.vocabulary = dataset.label_vocabulary;
  std::string hindex;
  std::string manifest;
  std::string groups;
  std::vector<std::string> vec_ids;
  std::vector<Eigen::VectorXd> vecs;
  for (std::size_t i = 0; i < dataset.candidates.size(); ++i) {
    const auto& rec = dataset.candidates[i];
    table.labels.emplace(rec.node_id, rec.labels);
    hindex += rec.node_id + '\t' + std::to_string(rec.h_index_raw) + '\n';
    if (!dataset.groups.empty()) {
      groups += rec.node_id + '\t' + std::to_string(dataset.groups[i]) + '\n';
    }
    if (rec.documents) {
      const auto rel = std::filesystem::path("docs") / (rec.node_id + ".txt");
      text::write_file(dir / rel, format_documents(*rec.documents));
      manifest += rec.node_id + '\t' + rel.generic_string() + '\n';
    }
    if (rec.doc_embedding) {
      vec_ids.push_back(rec.node_id);
      vecs.push_back(*rec.doc_embedding);
    }
  }
  text::write_file(paths.labels, format_labels(table));
  text::write_file(paths.hindex, hindex);
  text::write_file(paths.documents, manifest);
  if (!dataset.groups.empty()) text::write_file(paths.groups, groups);
  Eigen::MatrixXd mat(vecs.empty() ? 1 : vecs.front().size(), static_cast<Eigen::Index>(vecs.size()));
  for (std::size_t i = 0; i < vecs.size(); ++i) mat.col(static_cast<Eigen::Index>(i)) = vecs[i];
  save_embeddings(paths.doc_vectors, vec_ids, mat);
}

Dataset load_dataset(const DatasetPaths& paths) {
  Dataset data;
  data.graph = load_edge_list(paths.edges);
  auto table = load_labels(paths.labels, &data.graph);
  if (!table.skipped.empty()) {
    std::cerr << "warning: " << table.skipped.size()
              << " labeled node(s) absent from the graph were skipped\n";
  }
  data.label_vocabulary = table.vocabulary;

  std::map<std::string, std::int64_t> hindex;
  if (!paths.hindex.empty() && std::filesystem::exists(paths.hindex)) {
    hindex = load_hindex(paths.hindex);
  }
  std::map<std::string, std::filesystem::path> doc_files;
  if (!paths.documents.empty() && std::filesystem::exists(paths.documents)) {
    doc_files = load_document_manifest(paths.documents);
  }
  std::map<std::string, Eigen::VectorXd> vectors;
  if (!paths.doc_vectors.empty() && std::filesystem::exists(paths.doc_vectors)) {
    auto file = load_embeddings(paths.doc_vectors);
    for (std::size_t i = 0; i < file.size(); ++i) {
      vectors[file.tokens[i]] = file.vectors.col(static_cast<Eigen::Index>(i));
    }
  }
  std::map<std::string, int> groups;
  if (!paths.groups.empty() && std::filesystem::exists(paths.groups)) {
    std::istringstream in(text::read_file(paths.groups));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (text::is_blank_or_comment(line)) continue;
      const auto f = text::split_ws(line);
      if (f.size() != 2) throw ParseError(paths.groups.string(), line_no, "expected 'node<TAB>group'");
      groups[std::string(f[0])] = static_cast<int>(text::parse_int(f[1], paths.groups.string(), line_no));
    }
  }

  for (auto& [node, labels] : table.labels) {
    CandidateRecord rec;
    rec.node_id = node;
    rec.labels = labels;
    if (auto it = hindex.find(node); it != hindex.end()) {
      if (it->second < 0) throw ValidationError("negative h-index for '" + node + "'");
      rec.h_index_raw = it->second;
    }
    if (auto it = doc_files.find(node); it != doc_files.end()) {
      rec.documents = parse_documents(text::read_file(it->second));
    }
    if (auto it = vectors.find(node); it != vectors.end()) rec.doc_embedding = it->second;
    data.candidates.push_back(std::move(rec));
  }
  if (!groups.empty()) {
    for (const auto& rec : data.candidates) {
      const auto it = groups.find(rec.node_id);
      data.groups.push_back(it == groups.end() ? -1 : it->second);
    }
  }
  return data;
}

}  // namespace xrec
