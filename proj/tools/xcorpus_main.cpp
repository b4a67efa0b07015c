#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "xcorpus/commands.hpp"
#include "xcorpus/error.hpp"
#include "xcorpus/run_config.hpp"

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
};

xcorpus::RunConfig resolve(const GlobalFlags& g) {
  if (g.config.empty()) throw xcorpus::UsageError("--config is required");
  auto cfg = xcorpus::RunConfig::load(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.out) cfg.output_dir = *g.out;
  if (g.threads) {
    if (*g.threads < 1) throw xcorpus::UsageError("--threads must be at least 1");
    cfg.threads = *g.threads;
  }
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-corpus text classification toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags g;
  app.add_option("--config", g.config, "run configuration (JSON)");
  app.add_option("--seed", g.seed, "root seed, overrides the config");
  app.add_option("--out", g.out, "output directory, overrides the config");
  app.add_option("--threads", g.threads, "worker threads");

  using Command = void (*)(const xcorpus::RunConfig&, std::ostream*);
  const std::pair<const char*, Command> pipeline[] = {
      {"stats", xcorpus::commands::cmd_stats},
      {"similarity", xcorpus::commands::cmd_similarity},
      {"tsne", xcorpus::commands::cmd_tsne},
      {"train", xcorpus::commands::cmd_train},
      {"eval-grid", xcorpus::commands::cmd_eval_grid},
      {"ensemble", xcorpus::commands::cmd_ensemble},
  };
  const char* help[] = {"per-class message and word counts", "class-corpus TFIDF cosine matrix and top terms",
                        "2-D projection of top terms",       "train one builtin model per dataset",
                        "cross-dataset evaluation grid",     "ensemble strategies on every test split"};
  Command chosen = nullptr;
  for (std::size_t i = 0; i < std::size(pipeline); ++i) {
    auto* sub = app.add_subcommand(pipeline[i].first, help[i]);
    sub->callback([&chosen, fn = pipeline[i].second] { chosen = fn; });
  }

  xcorpus::synth::SyntheticSpec spec;
  std::string synth_dir;
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset suite");
  synth->add_option("dir", synth_dir, "target directory")->required();
  synth->add_option("--datasets", spec.n_datasets);
  synth->add_option("--messages", spec.messages_per_dataset);
  synth->add_option("--vocab", spec.vocab_size);
  synth->add_option("--positive-rate", spec.positive_rate);
  synth->add_option("--signal", spec.class_signal_strength);
  synth->add_option("--signal-words", spec.signal_words_per_dataset);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      if (g.seed) spec.seed = *g.seed;
      spec.validate();
      const auto files = xcorpus::commands::cmd_synth(spec, synth_dir);
      std::cerr << "wrote " << files.datasets.size() << " datasets and " << files.config.string() << '\n';
      return 0;
    }
    const auto cfg = resolve(g);
    chosen(cfg, &std::cerr);
    return 0;
  } catch (const xcorpus::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
