// xrec: expert-recommendation pipeline driver.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "xrec/config.hpp"
#include "xrec/error.hpp"
#include "xrec/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Expert recommendation over co-author graphs and documents"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  long long seed = -1;
  long long threads = -1;
  std::vector<std::string> overrides;
  bool force = false;
  bool unweighted = false;
  bool cls = false;
  app.add_option("--config", config_path, "key=value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed");
  app.add_option("--out", out, "output directory");
  app.add_option("--threads", threads, "worker threads");
  app.add_option("--set", overrides, "override a config key (key=value); repeatable");
  app.add_flag("--force", force, "accept upstream artifacts produced by a different configuration");
  app.add_flag("--unweighted", unweighted, "ignore edge weights in walks (walks.weighted=false)");
  app.add_flag("--cls", cls, "read documents out of a prepended [CLS] token (docs.readout=cls)");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"synth", "generate the synthetic dataset"},
      {"walks", "generate the walk corpus"},
      {"embed-nodes", "train node embeddings on the walk corpus"},
      {"embed-docs", "encode or ingest per-candidate document vectors"},
      {"train", "train the fusion classifier"},
      {"eval", "train-ratio and final-width sweeps"},
      {"viz", "2D projection of candidate embeddings"},
      {"pipeline", "run every stage in order"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    xrec::Config config = config_path.empty() ? xrec::Config{} : xrec::Config::load(config_path);
    for (const auto& o : overrides) config.set(o);
    if (seed >= 0) config.set("seed", std::to_string(seed));
    if (threads >= 0) config.set("threads", std::to_string(threads));
    if (!out.empty()) config.set("out", out);
    if (force) config.set("force", "true");
    if (unweighted) config.set("walks.weighted", "false");
    if (cls) config.set("docs.readout", "cls");
    const auto pipeline = xrec::PipelineConfig::from(config);

    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "pipeline") {
      xrec::cmd_pipeline(pipeline);
      return 0;
    }
    for (auto s : {xrec::Stage::Synth, xrec::Stage::Walks, xrec::Stage::EmbedNodes, xrec::Stage::EmbedDocs,
                   xrec::Stage::Train, xrec::Stage::Eval, xrec::Stage::Viz}) {
      if (xrec::to_string(s) == name) {
        xrec::run_stage(pipeline, s);
        return 0;
      }
    }
    std::cerr << "xrec: unknown subcommand " << name << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "xrec: error: " << e.what() << '\n';
    return 1;
  }
}
