#pragma once

// Candidate dataset: graph plus per-candidate labels, h-index and text, and a
// planted-partition generator standing in for a crawled bibliographic corpus.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xrec/graph.hpp"

namespace xrec {

struct Dataset {
  ExpertGraph graph;
  std::vector<std::string> label_vocabulary;
  std::vector<CandidateRecord> candidates;  // labeled candidates, sorted by node id
  /// Ground-truth cluster per candidate (community id for synthetic data);
  /// empty when unknown.
  std::vector<int> groups;

  std::size_t num_classes() const { return label_vocabulary.size(); }
};

struct SynthConfig {
  std::size_t nodes = 1000;
  std::size_t communities = 3;
  std::size_t labels_per_node = 1;
  std::size_t num_labels = 0;  // 0 -> 2 * communities
  double intra_degree = 12.0;  // expected neighbors inside the community
  double inter_degree = 1.0;   // expected neighbors outside it
  double doc_signal = 1.0;     // strength of the planted document direction, [0,1]
  bool graph_signal = true;    // whether labels depend on the community id
  std::size_t doc_dim = 512;
  double doc_noise = 0.5;      // expected norm of the isotropic doc-vector noise
  std::size_t docs_per_node = 2;
  std::size_t doc_length = 24;
  std::size_t doc_vocab = 240;
  double text_fraction = 1.0;  // fraction of candidates that have text
  std::uint64_t seed = 1;

  void validate() const;
};

/// Planted-partition graph. Each candidate's primary label is the pair
/// (community, sign of its document direction), so neither the graph nor the
/// text alone determines it. Deterministic in `seed`.
Dataset synth_dataset(const SynthConfig& config);

struct DatasetPaths {
  std::filesystem::path edges;
  std::filesystem::path labels;
  std::filesystem::path hindex;       // optional
  std::filesystem::path documents;    // optional manifest `node<TAB>path`
  std::filesystem::path doc_vectors;  // optional embedding file keyed by node
  std::filesystem::path groups;       // optional `node<TAB>group`

  static DatasetPaths in_directory(const std::filesystem::path& dir);
};

/// Writes every file named in DatasetPaths::in_directory(dir), plus one
/// document file per candidate under dir/docs.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Candidates are the labeled nodes present in the graph.
Dataset load_dataset(const DatasetPaths& paths);

}  // namespace xrec
