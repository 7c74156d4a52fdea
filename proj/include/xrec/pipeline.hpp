#pragma once

// End-to-end stages behind the `xrec` subcommands. Every stage reads the
// artifacts of its upstream stages from the output directory, writes its own,
// and records a manifest with the configuration hash that produced them.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xrec/config.hpp"
#include "xrec/dataset.hpp"
#include "xrec/encoder.hpp"
#include "xrec/fusion.hpp"
#include "xrec/sgns.hpp"
#include "xrec/sweep.hpp"
#include "xrec/walks.hpp"

namespace xrec {

enum class Stage { Synth, Walks, EmbedNodes, EmbedDocs, Train, Eval, Viz };

std::string to_string(Stage s);        // subcommand name, e.g. "embed-nodes"
std::vector<Stage> upstream_of(Stage s);

enum class EmbedMode { Word2vec, Fasttext, Combined };
enum class DocSource { Auto, Ingest, Encode };

struct PipelineConfig {
  std::filesystem::path out = "xrec-out";
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  bool force = false;

  bool synthetic = true;          // data.source=synth|files
  DatasetPaths files;             // data.edges, data.labels, ... when not synthetic
  SynthConfig synth;

  WalkParams walks;
  EmbedMode embed_mode = EmbedMode::Word2vec;
  SgnsConfig sgns;

  DocSource doc_source = DocSource::Auto;
  EncoderConfig encoder;          // encoder.model_dim is the document dimension d_t

  TrainConfig train;
  Modality variant = Modality::Fused;  // variant used by `train` and `viz`

  std::vector<double> ratios = default_ratios();
  std::size_t eval_seeds = 5;
  std::vector<std::size_t> widths{16, 64, 256};
  double width_ratio = 0.5;
  std::vector<Modality> variants{Modality::Fused, Modality::DocOnly, Modality::GraphOnly};
  EvalOptions eval;
  bool wall_time = false;         // write measured wall_ms instead of 0

  std::size_t viz_clusters = 3;

  /// Reads every known key (defaults for the rest) and validates.
  static PipelineConfig from(const Config& config);
  void validate() const;

  Eigen::Index doc_dim() const { return static_cast<Eigen::Index>(encoder.model_dim); }
  Eigen::Index node_dim() const;
  FeatureLayout layout() const { return {doc_dim(), node_dim()}; }

  /// Fully resolved `key=value` lines, sorted.
  std::string resolved() const;
  /// Hash of the settings a stage depends on, chained with its upstream hashes.
  std::string stage_hash(Stage s) const;

  std::filesystem::path data_dir() const { return out / "data"; }
  DatasetPaths dataset_paths() const;
  std::filesystem::path manifest_path(Stage s) const;
};

/// Artifacts each stage writes, relative to the output directory.
std::vector<std::filesystem::path> stage_outputs(const PipelineConfig& config, Stage s);

void cmd_synth(const PipelineConfig& config);
void cmd_walks(const PipelineConfig& config);
void cmd_embed_nodes(const PipelineConfig& config);
void cmd_embed_docs(const PipelineConfig& config);
void cmd_train(const PipelineConfig& config);
void cmd_eval(const PipelineConfig& config);
void cmd_viz(const PipelineConfig& config);
void cmd_pipeline(const PipelineConfig& config);

void run_stage(const PipelineConfig& config, Stage s);

/// Fused candidate features with the requested modality spans zeroed.
struct CandidateFeatures {
  LabeledFeatures data;
  std::vector<int> groups;
  std::vector<char> doc_missing;
  FeatureLayout layout;
};
CandidateFeatures load_candidate_features(const PipelineConfig& config, Modality modality);

}  // namespace xrec
