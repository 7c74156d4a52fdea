#include "xrec/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <type_traits>

#include "xrec/documents.hpp"
#include "xrec/embedding_io.hpp"
#include "xrec/error.hpp"
#include "xrec/pca.hpp"
#include "xrec/scatter.hpp"
#include "xrec/text.hpp"

namespace xrec {

namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& items, const std::string& sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

std::string fmt(double v) { return text::format_g(v, 17); }
std::string fmt(bool v) { return v ? "true" : "false"; }
template <class T>
  requires std::is_integral_v<T>
std::string fmt(T v) { return std::to_string(v); }

std::string to_string(EmbedMode m) {
  switch (m) {
    case EmbedMode::Word2vec: return "word2vec";
    case EmbedMode::Fasttext: return "fasttext";
    case EmbedMode::Combined: return "combined";
  }
  return "?";
}

std::string to_string(DocSource s) {
  switch (s) {
    case DocSource::Auto: return "auto";
    case DocSource::Ingest: return "ingest";
    case DocSource::Encode: return "encode";
  }
  return "?";
}

std::string to_string(Optimizer o) { return o == Optimizer::Adam ? "adam" : "sgd"; }

template <class Enum>
Enum pick(const std::string& key, const std::string& value, const std::map<std::string, Enum>& choices) {
  if (auto it = choices.find(value); it != choices.end()) return it->second;
  std::vector<std::string> names;
  for (const auto& [name, e] : choices) names.push_back(name);
  throw ValidationError("config key " + key + ": '" + value + "' is not one of " + join(names, "|"));
}

void log(Stage s, const std::string& message) { std::cerr << "[" << to_string(s) << "] " << message << '\n'; }

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

std::string file_digest(const fs::path& path) { return text::hex64(text::fnv1a(text::read_file(path))); }

std::string with_hash_comment(const std::string& hash, const std::string& body) {
  return "# config_hash=" + hash + "\n" + body;
}

// ---- manifests ----------------------------------------------------------

struct Manifest {
  std::string stage;
  std::string config_hash;
  std::vector<std::pair<std::string, std::string>> files;  // relative path, digest
};

void write_manifest(const PipelineConfig& config, Stage s) {
  std::string out = "# xrec stage manifest\nstage=" + to_string(s) + "\nconfig_hash=" + config.stage_hash(s) + "\n";
  for (auto u : upstream_of(s)) out += "upstream." + to_string(u) + "=" + config.stage_hash(u) + "\n";
  for (const auto& rel : stage_outputs(config, s)) {
    out += "file=" + rel.generic_string() + " " + file_digest(config.out / rel) + "\n";
  }
  text::write_file(config.manifest_path(s), out);
}

Manifest read_manifest(const fs::path& path) {
  Manifest m;
  std::istringstream in(text::read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (text::is_blank_or_comment(line)) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const auto key = line.substr(0, eq);
    const auto value = line.substr(eq + 1);
    if (key == "stage") m.stage = value;
    else if (key == "config_hash") m.config_hash = value;
    else if (key == "file") {
      const auto sp = value.rfind(' ');
      if (sp != std::string::npos) m.files.emplace_back(value.substr(0, sp), value.substr(sp + 1));
    }
  }
  return m;
}

void require_upstream(const PipelineConfig& config, Stage s) {
  for (auto u : upstream_of(s)) {
    if (u == Stage::Synth && !config.synthetic) {
      const std::vector<std::pair<std::string, fs::path>> inputs{{"data.edges", config.files.edges},
                                                                 {"data.labels", config.files.labels}};
      for (const auto& [key, path] : inputs) {
        if (path.empty() || !fs::exists(path)) throw ValidationError(key + " '" + path.string() + "' does not exist");
      }
      continue;
    }
    const auto path = config.manifest_path(u);
    if (!fs::exists(path)) {
      throw std::runtime_error("missing " + to_string(u) + " artifacts (" + path.string() + "); run `xrec " +
                               to_string(u) + "` first");
    }
    const auto manifest = read_manifest(path);
    const auto expected = config.stage_hash(u);
    if (manifest.config_hash != expected) {
      const std::string msg = to_string(u) + " artifacts in " + config.out.string() +
                              " were produced by a different configuration (hash " + manifest.config_hash +
                              ", current " + expected + ")";
      if (!config.force) throw ValidationError(msg + "; rerun `xrec " + to_string(u) + "` or pass --force");
      log(s, "warning: " + msg + "; continuing because --force was given");
    }
    for (const auto& [rel, digest] : manifest.files) {
      const auto file = config.out / rel;
      if (!fs::exists(file)) {
        throw std::runtime_error("missing " + file.string() + "; run `xrec " + to_string(u) + "`");
      }
      if (file_digest(file) != digest && !config.force) {
        throw ValidationError(file.string() + " changed since `xrec " + to_string(u) +
                              "` wrote it; rerun that stage or pass --force");
      }
    }
  }
}

// ---- shared loaders ------------------------------------------------------

fs::path corpus_path(const PipelineConfig& c) { return c.out / "walks" / "corpus.txt"; }
fs::path nodes_path(const PipelineConfig& c) { return c.out / "embeddings" / "nodes.emb"; }
fs::path docs_path(const PipelineConfig& c) { return c.out / "embeddings" / "docs.emb"; }
fs::path docs_missing_path(const PipelineConfig& c) { return c.out / "embeddings" / "docs_missing.txt"; }
fs::path checkpoint_path(const PipelineConfig& c) { return c.out / "model" / "checkpoint.txt"; }

Dataset load_pipeline_dataset(const PipelineConfig& config) { return load_dataset(config.dataset_paths()); }

std::map<std::string, Eigen::VectorXd> embedding_map(const fs::path& path, Eigen::Index expected_dim) {
  const auto file = load_embeddings(path);
  if (file.size() > 0 && file.dim() != expected_dim) {
    throw ValidationError(path.string() + " has dimension " + std::to_string(file.dim()) + ", configuration expects " +
                          std::to_string(expected_dim));
  }
  std::map<std::string, Eigen::VectorXd> out;
  for (std::size_t i = 0; i < file.size(); ++i) out[file.tokens[i]] = file.vectors.col(static_cast<Eigen::Index>(i));
  return out;
}

TrainConfig cell_train_config(const PipelineConfig& config, std::uint64_t seed) {
  TrainConfig tc = config.train;
  tc.seed = text::mix_seed(config.train.seed, seed);
  return tc;
}

std::vector<std::uint64_t> eval_seed_list(const PipelineConfig& config) {
  std::vector<std::uint64_t> seeds(config.eval_seeds);
  std::iota(seeds.begin(), seeds.end(), config.seed);
  return seeds;
}

}  // namespace

// ---- stage metadata ------------------------------------------------------

std::string to_string(Stage s) {
  switch (s) {
    case Stage::Synth: return "synth";
    case Stage::Walks: return "walks";
    case Stage::EmbedNodes: return "embed-nodes";
    case Stage::EmbedDocs: return "embed-docs";
    case Stage::Train: return "train";
    case Stage::Eval: return "eval";
    case Stage::Viz: return "viz";
  }
  return "?";
}

std::vector<Stage> upstream_of(Stage s) {
  switch (s) {
    case Stage::Synth: return {};
    case Stage::Walks: return {Stage::Synth};
    case Stage::EmbedNodes: return {Stage::Walks};
    case Stage::EmbedDocs: return {Stage::Synth};
    case Stage::Train:
    case Stage::Eval: return {Stage::Synth, Stage::EmbedNodes, Stage::EmbedDocs};
    case Stage::Viz: return {Stage::Synth, Stage::Train};
  }
  return {};
}

std::vector<fs::path> stage_outputs(const PipelineConfig& config, Stage s) {
  switch (s) {
    case Stage::Synth: {
      const std::vector<fs::path> names{"graph.tsv", "labels.tsv", "hindex.tsv", "documents.tsv", "doc_vectors.emb",
                                        "groups.tsv"};
      std::vector<fs::path> out;
      for (const auto& n : names) out.push_back(fs::path("data") / n);
      return out;
    }
    case Stage::Walks: return {"walks/corpus.txt"};
    case Stage::EmbedNodes: return {"embeddings/nodes.emb"};
    case Stage::EmbedDocs: return {"embeddings/docs.emb", "embeddings/docs_missing.txt"};
    case Stage::Train: return {"model/checkpoint.txt", "model/loss.csv", "model/ranking.csv"};
    case Stage::Eval: {
      std::vector<fs::path> out;
      for (auto v : config.variants) out.push_back(fs::path("reports") / ("ratio_" + to_string(v) + ".csv"));
      if (!config.widths.empty()) out.push_back("reports/width.csv");
      return out;
    }
    case Stage::Viz: return {"viz/scatter.csv", "viz/scatter.svg"};
  }
  return {};
}

// ---- configuration -------------------------------------------------------

namespace {

template <class T>
T list_number(const std::string& key, const std::string& item) {
  try {
    if constexpr (std::is_floating_point_v<T>) {
      return text::parse_double(item, "", 0);
    } else {
      return text::parse_int(item, "", 0);
    }
  } catch (const ParseError&) {
    throw ValidationError("config key " + key + ": '" + item + "' is not a number");
  }
}

}  // namespace

PipelineConfig PipelineConfig::from(const Config& c) {
  PipelineConfig p;
  p.out = c.get("out", p.out.string());
  p.seed = static_cast<std::uint64_t>(c.get_int("seed", 1));
  p.threads = c.get_size("threads", 1);
  p.force = c.get_bool("force", false);

  p.synthetic = pick<bool>("data.source", c.get("data.source", "synth"), {{"synth", true}, {"files", false}});
  p.files.edges = c.get("data.edges", "");
  p.files.labels = c.get("data.labels", "");
  p.files.hindex = c.get("data.hindex", "");
  p.files.documents = c.get("data.documents", "");
  p.files.doc_vectors = c.get("data.doc_vectors", "");
  p.files.groups = c.get("data.groups", "");

  auto& s = p.synth;
  s.nodes = c.get_size("data.nodes", s.nodes);
  s.communities = c.get_size("data.communities", s.communities);
  s.labels_per_node = c.get_size("data.labels_per_node", s.labels_per_node);
  s.num_labels = c.get_size("data.num_labels", s.num_labels);
  s.intra_degree = c.get_double("data.intra_degree", s.intra_degree);
  s.inter_degree = c.get_double("data.inter_degree", s.inter_degree);
  s.doc_signal = c.get_double("data.doc_signal", s.doc_signal);
  s.graph_signal = c.get_bool("data.graph_signal", s.graph_signal);
  s.doc_noise = c.get_double("data.doc_noise", s.doc_noise);
  s.docs_per_node = c.get_size("data.docs_per_node", s.docs_per_node);
  s.doc_length = c.get_size("data.doc_length", s.doc_length);
  s.doc_vocab = c.get_size("data.doc_vocab", s.doc_vocab);
  s.text_fraction = c.get_double("data.text_fraction", s.text_fraction);
  s.seed = static_cast<std::uint64_t>(c.get_int("data.seed", static_cast<std::int64_t>(p.seed)));

  auto& w = p.walks;
  w.strategy = parse_walk_strategy(c.get("walks.strategy", to_string(w.strategy)));
  w.walks_per_node = c.get_size("walks.per_node", w.walks_per_node);
  w.walk_length = c.get_size("walks.length", w.walk_length);
  w.p = c.get_double("walks.p", w.p);
  w.q = c.get_double("walks.q", w.q);
  w.weighted = c.get_bool("walks.weighted", w.weighted);
  w.max_retries = c.get_size("walks.max_retries", w.max_retries);
  w.exem_start_from_all = c.get_bool("walks.start_from_all", w.exem_start_from_all);
  w.seed = static_cast<std::uint64_t>(c.get_int("walks.seed", static_cast<std::int64_t>(text::mix_seed(p.seed, 1) >> 1)));
  w.threads = p.threads;

  p.embed_mode = pick<EmbedMode>("embed.mode", c.get("embed.mode", "word2vec"),
                                 {{"word2vec", EmbedMode::Word2vec}, {"fasttext", EmbedMode::Fasttext},
                                  {"combined", EmbedMode::Combined}});
  auto& g = p.sgns;
  g.dim = c.get_size("embed.dim", g.dim);
  g.window = c.get_size("embed.window", g.window);
  g.negatives = c.get_size("embed.negatives", g.negatives);
  g.epochs = c.get_size("embed.epochs", g.epochs);
  g.learning_rate = c.get_double("embed.lr", g.learning_rate);
  g.min_n = c.get_size("embed.min_n", g.min_n);
  g.max_n = c.get_size("embed.max_n", g.max_n);
  g.hogwild = c.get_bool("embed.hogwild", g.hogwild);
  g.seed = static_cast<std::uint64_t>(c.get_int("embed.seed", static_cast<std::int64_t>(text::mix_seed(p.seed, 2) >> 1)));
  g.threads = p.threads;

  p.doc_source = pick<DocSource>("docs.source", c.get("docs.source", "auto"),
                                 {{"auto", DocSource::Auto}, {"ingest", DocSource::Ingest}, {"encode", DocSource::Encode}});
  auto& e = p.encoder;
  e.model_dim = c.get_size("docs.dim", e.model_dim);
  e.layers = c.get_size("docs.layers", e.layers);
  e.heads = c.get_size("docs.heads", e.heads);
  e.ff_dim = c.get_size("docs.ff_dim", e.ff_dim);
  e.positional = c.get_bool("docs.positional", e.positional);
  e.readout = pick<Readout>("docs.readout", c.get("docs.readout", "mean"), {{"mean", Readout::Mean}, {"cls", Readout::Cls}});
  e.seed = static_cast<std::uint64_t>(c.get_int("docs.seed", static_cast<std::int64_t>(text::mix_seed(p.seed, 3) >> 1)));
  s.doc_dim = c.get_size("data.doc_dim", e.model_dim);

  auto& t = p.train;
  t.hidden_dim = c.get_size("fusion.hidden", t.hidden_dim);
  t.final_dim = c.get_size("fusion.final", t.final_dim);
  t.epochs = c.get_size("fusion.epochs", t.epochs);
  t.batch_size = c.get_size("fusion.batch", t.batch_size);
  t.learning_rate = c.get_double("fusion.lr", t.learning_rate);
  t.momentum = c.get_double("fusion.momentum", t.momentum);
  t.optimizer = pick<Optimizer>("fusion.optimizer", c.get("fusion.optimizer", "sgd"),
                                {{"sgd", Optimizer::SgdMomentum}, {"adam", Optimizer::Adam}});
  t.threshold = c.get_double("fusion.threshold", t.threshold);
  t.seed = static_cast<std::uint64_t>(c.get_int("fusion.seed", static_cast<std::int64_t>(text::mix_seed(p.seed, 4) >> 1)));
  p.variant = parse_modality(c.get("fusion.variant", "fused"));

  p.ratios.clear();
  for (const auto& r : c.get_list("eval.ratios", {"0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9"})) {
    p.ratios.push_back(list_number<double>("eval.ratios", r));
  }
  p.eval_seeds = c.get_size("eval.seeds", p.eval_seeds);
  p.widths.clear();
  for (const auto& d : c.get_list("eval.widths", {"16", "64", "256"})) {
    const auto w = list_number<std::int64_t>("eval.widths", d);
    if (w < 0) throw ValidationError("eval.widths entries must be >= 1");
    p.widths.push_back(static_cast<std::size_t>(w));
  }
  p.width_ratio = c.get_double("eval.width_ratio", p.width_ratio);
  p.variants.clear();
  for (const auto& v : c.get_list("eval.variants", {"fused", "doc", "graph"})) p.variants.push_back(parse_modality(v));
  p.eval.rule = pick<DecisionRule>("eval.rule", c.get("eval.rule", "threshold"),
                                   {{"threshold", DecisionRule::Threshold}, {"topk", DecisionRule::TopK}});
  p.eval.threshold = t.threshold;
  p.eval.top_k = c.get_size("eval.top_k", p.eval.top_k);
  p.eval.stratified = c.get_bool("eval.stratified", p.eval.stratified);
  p.eval.threads = p.threads;
  p.wall_time = c.get_bool("eval.wall_time", p.wall_time);

  p.viz_clusters = c.get_size("viz.clusters", p.viz_clusters);

  const auto input_dim = c.get_size("fusion.input_dim", 0);
  p.validate();
  if (input_dim != 0 && static_cast<Eigen::Index>(input_dim) != p.layout().size()) {
    throw ValidationError("fusion.input_dim=" + std::to_string(input_dim) + " but docs.dim + node dim + 1 = " +
                          std::to_string(p.layout().size()));
  }
  for (const auto& key : c.unread_keys()) std::cerr << "warning: unknown config key '" << key << "' ignored\n";
  return p;
}

void PipelineConfig::validate() const {
  if (threads == 0) throw ValidationError("threads must be >= 1");
  if (synthetic) {
    synth.validate();
    if (doc_source != DocSource::Encode && synth.doc_dim != encoder.model_dim) {
      throw ValidationError("data.doc_dim=" + std::to_string(synth.doc_dim) + " differs from docs.dim=" +
                            std::to_string(encoder.model_dim) + "; ingested document vectors must match d_t");
    }
  } else if (files.edges.empty() || files.labels.empty()) {
    throw ValidationError("data.source=files requires data.edges and data.labels");
  }
  walks.validate();
  sgns.validate();
  if (embed_mode != EmbedMode::Word2vec && sgns.min_n > sgns.max_n) {
    throw ValidationError("embed.min_n must not exceed embed.max_n");
  }
  encoder.validate();
  train.validate();
  if (eval_seeds == 0) throw ValidationError("eval.seeds must be >= 1");
  if (!(width_ratio > 0.0 && width_ratio < 1.0)) throw ValidationError("eval.width_ratio must lie in (0,1)");
  for (auto w : widths) {
    if (w == 0) throw ValidationError("eval.widths entries must be >= 1");
  }
  if (eval.rule == DecisionRule::TopK && eval.top_k == 0) throw ValidationError("eval.top_k must be >= 1");
}

Eigen::Index PipelineConfig::node_dim() const {
  const auto d = static_cast<Eigen::Index>(sgns.dim);
  return embed_mode == EmbedMode::Combined ? 2 * d : d;
}

DatasetPaths PipelineConfig::dataset_paths() const {
  return synthetic ? DatasetPaths::in_directory(data_dir()) : files;
}

fs::path PipelineConfig::manifest_path(Stage s) const { return out / "manifests" / (to_string(s) + ".manifest"); }

std::string PipelineConfig::resolved() const {
  std::map<std::string, std::string> kv;
  kv["seed"] = fmt(seed);
  kv["data.source"] = synthetic ? "synth" : "files";
  if (synthetic) {
    kv["data.nodes"] = fmt(synth.nodes);
    kv["data.communities"] = fmt(synth.communities);
    kv["data.labels_per_node"] = fmt(synth.labels_per_node);
    kv["data.num_labels"] = fmt(synth.num_labels);
    kv["data.intra_degree"] = fmt(synth.intra_degree);
    kv["data.inter_degree"] = fmt(synth.inter_degree);
    kv["data.doc_signal"] = fmt(synth.doc_signal);
    kv["data.graph_signal"] = fmt(synth.graph_signal);
    kv["data.doc_dim"] = fmt(synth.doc_dim);
    kv["data.doc_noise"] = fmt(synth.doc_noise);
    kv["data.docs_per_node"] = fmt(synth.docs_per_node);
    kv["data.doc_length"] = fmt(synth.doc_length);
    kv["data.doc_vocab"] = fmt(synth.doc_vocab);
    kv["data.text_fraction"] = fmt(synth.text_fraction);
    kv["data.seed"] = fmt(synth.seed);
  } else {
    kv["data.edges"] = files.edges.string();
    kv["data.labels"] = files.labels.string();
    kv["data.hindex"] = files.hindex.string();
    kv["data.documents"] = files.documents.string();
    kv["data.doc_vectors"] = files.doc_vectors.string();
    kv["data.groups"] = files.groups.string();
  }
  kv["walks.strategy"] = to_string(walks.strategy);
  kv["walks.per_node"] = fmt(walks.walks_per_node);
  kv["walks.length"] = fmt(walks.walk_length);
  kv["walks.p"] = fmt(walks.p);
  kv["walks.q"] = fmt(walks.q);
  kv["walks.weighted"] = fmt(walks.weighted);
  kv["walks.max_retries"] = fmt(walks.max_retries);
  kv["walks.start_from_all"] = fmt(walks.exem_start_from_all);
  kv["walks.seed"] = fmt(walks.seed);
  kv["embed.mode"] = to_string(embed_mode);
  kv["embed.dim"] = fmt(sgns.dim);
  kv["embed.window"] = fmt(sgns.window);
  kv["embed.negatives"] = fmt(sgns.negatives);
  kv["embed.epochs"] = fmt(sgns.epochs);
  kv["embed.lr"] = fmt(sgns.learning_rate);
  kv["embed.min_n"] = fmt(sgns.min_n);
  kv["embed.max_n"] = fmt(sgns.max_n);
  kv["embed.hogwild"] = fmt(sgns.hogwild);
  kv["embed.seed"] = fmt(sgns.seed);
  kv["docs.source"] = to_string(doc_source);
  kv["docs.dim"] = fmt(encoder.model_dim);
  kv["docs.layers"] = fmt(encoder.layers);
  kv["docs.heads"] = fmt(encoder.heads);
  kv["docs.ff_dim"] = fmt(encoder.ff_dim);
  kv["docs.positional"] = fmt(encoder.positional);
  kv["docs.readout"] = encoder.readout == Readout::Cls ? "cls" : "mean";
  kv["docs.seed"] = fmt(encoder.seed);
  kv["fusion.hidden"] = fmt(train.hidden_dim);
  kv["fusion.final"] = fmt(train.final_dim);
  kv["fusion.epochs"] = fmt(train.epochs);
  kv["fusion.batch"] = fmt(train.batch_size);
  kv["fusion.lr"] = fmt(train.learning_rate);
  kv["fusion.momentum"] = fmt(train.momentum);
  kv["fusion.optimizer"] = to_string(train.optimizer);
  kv["fusion.threshold"] = fmt(train.threshold);
  kv["fusion.seed"] = fmt(train.seed);
  kv["fusion.variant"] = to_string(variant);
  std::vector<std::string> items;
  for (double r : ratios) items.push_back(text::format_g(r, 6));
  kv["eval.ratios"] = join(items);
  kv["eval.seeds"] = fmt(eval_seeds);
  items.clear();
  for (auto w : widths) items.push_back(fmt(w));
  kv["eval.widths"] = join(items);
  kv["eval.width_ratio"] = fmt(width_ratio);
  items.clear();
  for (auto v : variants) items.push_back(to_string(v));
  kv["eval.variants"] = join(items);
  kv["eval.rule"] = eval.rule == DecisionRule::TopK ? "topk" : "threshold";
  kv["eval.top_k"] = fmt(eval.top_k);
  kv["eval.stratified"] = fmt(eval.stratified);
  kv["eval.wall_time"] = fmt(wall_time);
  kv["viz.clusters"] = fmt(viz_clusters);

  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::string PipelineConfig::stage_hash(Stage s) const {
  std::vector<std::string> prefixes;
  switch (s) {
    case Stage::Synth: prefixes = {"data."}; break;
    case Stage::Walks: prefixes = {"walks."}; break;
    case Stage::EmbedNodes: prefixes = {"embed."}; break;
    case Stage::EmbedDocs: prefixes = {"docs."}; break;
    case Stage::Train: prefixes = {"fusion."}; break;
    case Stage::Eval: prefixes = {"eval.", "fusion."}; break;
    case Stage::Viz: prefixes = {"viz."}; break;
  }
  std::string material = "stage=" + to_string(s) + "\n";
  std::istringstream in(resolved());
  std::string line;
  while (std::getline(in, line)) {
    for (const auto& prefix : prefixes) {
      if (line.rfind(prefix, 0) == 0) material += line + "\n";
    }
  }
  if (s == Stage::Synth && !synthetic) {
    for (const auto& path : {files.edges, files.labels, files.hindex, files.documents, files.doc_vectors, files.groups}) {
      if (!path.empty() && fs::exists(path)) material += path.string() + "=" + file_digest(path) + "\n";
    }
  }
  for (auto u : upstream_of(s)) material += to_string(u) + "=" + stage_hash(u) + "\n";
  return text::hex64(text::fnv1a(material));
}

// ---- stages --------------------------------------------------------------

void cmd_synth(const PipelineConfig& config) {
  if (!config.synthetic) {
    throw ValidationError("`xrec synth` needs data.source=synth; with data.source=files the inputs are read directly");
  }
  const auto start = std::chrono::steady_clock::now();
  const auto dataset = synth_dataset(config.synth);
  write_dataset(dataset, config.data_dir());
  text::write_file(config.out / "config.resolved", config.resolved());
  write_manifest(config, Stage::Synth);
  log(Stage::Synth, std::to_string(dataset.graph.num_nodes()) + " nodes, " +
                        std::to_string(dataset.graph.num_edges()) + " edges, " +
                        std::to_string(dataset.num_classes()) + " classes (" +
                        text::format_g(elapsed_ms(start), 4) + " ms)");
}

void cmd_walks(const PipelineConfig& config) {
  require_upstream(config, Stage::Walks);
  const auto start = std::chrono::steady_clock::now();
  const auto graph = load_edge_list(config.dataset_paths().edges);
  const auto corpus = generate_walks(graph, config.walks);
  save_corpus(corpus, corpus_path(config), {"config_hash=" + config.stage_hash(Stage::Walks)});
  write_manifest(config, Stage::Walks);
  std::string msg = std::to_string(corpus.walks.size()) + " walks, " + std::to_string(corpus.num_tokens()) + " tokens";
  if (config.walks.strategy == WalkStrategy::ExEm) msg += ", retry_exhausted=" + std::to_string(corpus.retry_exhausted);
  log(Stage::Walks, msg + " (" + text::format_g(elapsed_ms(start), 4) + " ms)");
}

void cmd_embed_nodes(const PipelineConfig& config) {
  require_upstream(config, Stage::EmbedNodes);
  const auto start = std::chrono::steady_clock::now();
  const auto corpus = load_corpus(corpus_path(config));
  const auto train = [&](bool subword) {
    SgnsConfig sc = config.sgns;
    sc.subword = subword;
    if (subword) sc.seed = text::mix_seed(sc.seed, 0xf7);
    auto result = train_skipgram(corpus, sc);
    log(Stage::EmbedNodes, std::string(subword ? "fasttext" : "word2vec") + " loss " +
                               text::format_g(result.epoch_loss.empty() ? 0.0 : result.epoch_loss.front(), 5) + " -> " +
                               text::format_g(result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back(), 5));
    return result.table;
  };
  EmbeddingTable primary = train(config.embed_mode == EmbedMode::Fasttext);
  Eigen::MatrixXd vectors = primary.export_vectors();
  if (config.embed_mode == EmbedMode::Combined) {
    const EmbeddingTable sub = train(true);
    Eigen::MatrixXd both(vectors.rows() * 2, vectors.cols());
    for (std::size_t i = 0; i < primary.size(); ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      both.col(col) << vectors.col(col), node_embedding(sub, primary.tokens()[i]);
    }
    vectors = std::move(both);
  }
  save_embeddings(nodes_path(config), primary.tokens(), vectors);
  write_manifest(config, Stage::EmbedNodes);
  log(Stage::EmbedNodes, std::to_string(primary.size()) + " tokens x " + std::to_string(vectors.rows()) + " dims (" +
                             text::format_g(elapsed_ms(start), 4) + " ms)");
}

void cmd_embed_docs(const PipelineConfig& config) {
  require_upstream(config, Stage::EmbedDocs);
  const auto start = std::chrono::steady_clock::now();
  const auto dataset = load_pipeline_dataset(config);
  DocSource source = config.doc_source;
  if (source == DocSource::Auto) {
    const bool any_vector = std::any_of(dataset.candidates.begin(), dataset.candidates.end(),
                                        [](const CandidateRecord& r) { return r.doc_embedding.has_value(); });
    source = any_vector ? DocSource::Ingest : DocSource::Encode;
  }
  std::optional<DocumentEncoder> encoder;
  if (source == DocSource::Encode) encoder.emplace(config.encoder);
  const auto averaged = candidate_document_embeddings(dataset, encoder ? &*encoder : nullptr,
                                                      source == DocSource::Ingest, config.doc_dim(), config.threads);
  std::vector<std::string> ids;
  Eigen::MatrixXd vectors(config.doc_dim(), static_cast<Eigen::Index>(averaged.size()));
  std::string missing = "# config_hash=" + config.stage_hash(Stage::EmbedDocs) + "\n";
  std::size_t n_missing = 0;
  for (std::size_t i = 0; i < averaged.size(); ++i) {
    ids.push_back(dataset.candidates[i].node_id);
    vectors.col(static_cast<Eigen::Index>(i)) = averaged[i].vector;
    if (averaged[i].missing) {
      missing += ids.back() + "\n";
      ++n_missing;
    }
  }
  save_embeddings(docs_path(config), ids, vectors);
  text::write_file(docs_missing_path(config), missing);
  write_manifest(config, Stage::EmbedDocs);
  log(Stage::EmbedDocs, std::to_string(ids.size()) + " candidates (" + to_string(source) + "), " +
                            std::to_string(n_missing) + " without text (" + text::format_g(elapsed_ms(start), 4) + " ms)");
}

CandidateFeatures load_candidate_features(const PipelineConfig& config, Modality modality) {
  const auto dataset = load_pipeline_dataset(config);
  const auto layout = config.layout();
  const auto nodes = embedding_map(nodes_path(config), layout.node_dim);
  const auto docs = embedding_map(docs_path(config), layout.doc_dim);
  std::set<std::string> missing_docs;
  {
    std::istringstream in(text::read_file(docs_missing_path(config)));
    std::string line;
    while (std::getline(in, line)) {
      if (!text::is_blank_or_comment(line)) missing_docs.emplace(text::trim(line));
    }
  }
  std::map<std::string, std::int64_t> raw;
  for (const auto& rec : dataset.candidates) raw[rec.node_id] = rec.h_index_raw;
  const auto hi = raw.empty() ? std::map<std::string, double>{} : normalize_hindex(raw);

  CandidateFeatures out;
  out.layout = layout;
  out.groups = dataset.groups;
  const auto n = static_cast<Eigen::Index>(dataset.candidates.size());
  out.data.features.resize(layout.size(), n);
  out.data.targets.resize(static_cast<Eigen::Index>(dataset.num_classes()), n);
  std::size_t missing_nodes = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& rec = dataset.candidates[static_cast<std::size_t>(i)];
    out.data.ids.push_back(rec.node_id);
    const auto d = docs.find(rec.node_id);
    if (d == docs.end()) {
      throw ValidationError("candidate '" + rec.node_id + "' has no row in " + docs_path(config).string() +
                            "; rerun `xrec embed-docs`");
    }
    Eigen::VectorXd node = Eigen::VectorXd::Zero(layout.node_dim);
    if (const auto it = nodes.find(rec.node_id); it != nodes.end()) node = it->second;
    else ++missing_nodes;
    out.data.features.col(i) = concat_features(d->second, node, hi.at(rec.node_id), &layout);
    out.data.targets.col(i) = rec.labels.as_vector();
    out.doc_missing.push_back(missing_docs.count(rec.node_id) ? 1 : 0);
  }
  if (missing_nodes > 0) {
    std::cerr << "warning: " << missing_nodes << " candidate(s) have no node embedding; using zeros\n";
  }
  apply_modality(out.data.features, layout, modality);
  return out;
}

void cmd_train(const PipelineConfig& config) {
  require_upstream(config, Stage::Train);
  const auto start = std::chrono::steady_clock::now();
  const auto hash = config.stage_hash(Stage::Train);
  const auto features = load_candidate_features(config, config.variant);
  const auto result = train_fusion(features.data, config.train);
  save_checkpoint(result.model, checkpoint_path(config), "config_hash=" + hash + "\n" + config.resolved());
  text::write_file(config.out / "model" / "loss.csv", with_hash_comment(hash, format_loss_curve(result.loss_curve)));

  const auto dataset = load_pipeline_dataset(config);
  const Eigen::MatrixXd probs = result.model.forward(features.data.features);
  std::string ranking = "node,rank,label,probability,predicted\n";
  for (Eigen::Index i = 0; i < probs.cols(); ++i) {
    const auto predicted = predict_labels(probs.col(i), config.train.threshold);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(probs.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return probs(a, i) > probs(b, i); });
    for (std::size_t r = 0; r < order.size(); ++r) {
      const auto c = order[r];
      ranking += features.data.ids[static_cast<std::size_t>(i)] + "," + std::to_string(r + 1) + "," +
                 dataset.label_vocabulary[static_cast<std::size_t>(c)] + "," + text::format_g(probs(c, i), 6) + "," +
                 (predicted.test(static_cast<std::size_t>(c)) ? "1" : "0") + "\n";
    }
  }
  text::write_file(config.out / "model" / "ranking.csv", with_hash_comment(hash, ranking));
  write_manifest(config, Stage::Train);
  const auto train_scores = evaluate(result.model, features.data, config.eval);
  log(Stage::Train, to_string(config.variant) + " model on " + std::to_string(features.data.size()) +
                        " candidates, final loss " +
                        text::format_g(result.loss_curve.empty() ? 0.0 : result.loss_curve.back(), 5) +
                        ", training micro-F1 " + text::format_g(train_scores.micro_f1, 4) + " (" +
                        text::format_g(elapsed_ms(start), 4) + " ms)");
}

void cmd_eval(const PipelineConfig& config) {
  require_upstream(config, Stage::Eval);
  const auto hash = config.stage_hash(Stage::Eval);
  const auto seeds = eval_seed_list(config);
  const auto comment = "config_hash=" + hash;
  std::string timings = "report,param,seed,wall_ms\n";
  auto record = [&](const std::string& name, const SweepReport& report) {
    for (const auto& w : report.warnings) log(Stage::Eval, "warning: " + w);
    for (const auto& row : report.rows) {
      timings += name + "," + row.param + "," + row.seed + "," + text::format_g(row.wall_ms, 6) + "\n";
    }
    text::write_file(config.out / "reports" / (name + ".csv"), report.format_csv(config.wall_time, comment));
  };

  for (auto variant : config.variants) {
    const auto start = std::chrono::steady_clock::now();
    const auto features = load_candidate_features(config, variant);
    const auto report = sweep_train_ratio(
        features.data,
        [&](const LabeledFeatures& train, std::uint64_t seed) {
          return train_fusion(train, cell_train_config(config, seed)).model;
        },
        config.ratios, seeds, config.eval);
    record("ratio_" + to_string(variant), report);
    std::string summary;
    for (const auto& row : report.rows) {
      if (row.seed == "mean") summary += " " + row.param + ":" + text::format_g(row.micro_f1, 3);
    }
    log(Stage::Eval, to_string(variant) + " micro-F1 by ratio" + summary + " (" +
                         text::format_g(elapsed_ms(start), 4) + " ms)");
  }
  if (!config.widths.empty()) {
    const auto start = std::chrono::steady_clock::now();
    const auto features = load_candidate_features(config, Modality::Fused);
    const auto report = sweep_dimension(
        features.data,
        [&](const LabeledFeatures& train, std::size_t width, std::uint64_t seed) {
          auto tc = cell_train_config(config, seed);
          tc.final_dim = width;
          return train_fusion(train, tc).model;
        },
        config.widths, seeds, config.width_ratio, config.eval);
    record("width", report);
    std::string summary;
    for (const auto& row : report.rows) {
      if (row.seed == "mean") summary += " " + row.param + ":" + text::format_g(row.micro_f1, 3);
    }
    log(Stage::Eval, "fused micro-F1 by final width" + summary + " (" + text::format_g(elapsed_ms(start), 4) + " ms)");
  }
  text::write_file(config.out / "logs" / "eval_timings.csv", timings);
  write_manifest(config, Stage::Eval);
}

void cmd_viz(const PipelineConfig& config) {
  require_upstream(config, Stage::Viz);
  const auto start = std::chrono::steady_clock::now();
  const auto model = load_checkpoint(checkpoint_path(config));
  // The checkpoint was trained on the configured variant's feature layout.
  const auto features = load_candidate_features(config, config.variant);
  const Eigen::MatrixXd embedded = model.embed(features.data.features);
  const auto projection = pca_project(embedded.transpose(), 2);

  std::vector<ScatterPoint> points;
  const Eigen::MatrixXd probs = features.groups.empty() ? model.forward(features.data.features) : Eigen::MatrixXd();
  for (std::size_t i = 0; i < features.data.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    std::string group;
    if (!features.groups.empty()) {
      group = "g" + std::to_string(features.groups[i]);
    } else {
      Eigen::Index arg = 0;
      probs.col(row).maxCoeff(&arg);
      group = "class" + std::to_string(arg);
    }
    points.push_back({features.data.ids[i], projection.coords(row, 0), projection.coords(row, 1), group});
  }
  std::set<std::string> groups;
  for (const auto& p : points) groups.insert(p.group);
  if (groups.size() != config.viz_clusters) {
    log(Stage::Viz, "warning: " + std::to_string(groups.size()) + " groups, viz.clusters=" +
                        std::to_string(config.viz_clusters));
  }
  export_scatter(points, config.out / "viz" / "scatter.csv", config.out / "viz" / "scatter.svg",
                 "config_hash=" + config.stage_hash(Stage::Viz));
  write_manifest(config, Stage::Viz);
  log(Stage::Viz, std::to_string(points.size()) + " points in " + std::to_string(groups.size()) + " groups (" +
                      text::format_g(elapsed_ms(start), 4) + " ms)");
}

void run_stage(const PipelineConfig& config, Stage s) {
  switch (s) {
    case Stage::Synth: return cmd_synth(config);
    case Stage::Walks: return cmd_walks(config);
    case Stage::EmbedNodes: return cmd_embed_nodes(config);
    case Stage::EmbedDocs: return cmd_embed_docs(config);
    case Stage::Train: return cmd_train(config);
    case Stage::Eval: return cmd_eval(config);
    case Stage::Viz: return cmd_viz(config);
  }
}

void cmd_pipeline(const PipelineConfig& config) {
  for (auto s : {Stage::Synth, Stage::Walks, Stage::EmbedNodes, Stage::EmbedDocs, Stage::Train, Stage::Eval, Stage::Viz}) {
    if (s == Stage::Synth && !config.synthetic) continue;
    run_stage(config, s);
  }
}

}  // namespace xrec
