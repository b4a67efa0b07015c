#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "xcorpus/classify.hpp"
#include "xcorpus/corpus.hpp"
#include "xcorpus/ensemble.hpp"
#include "xcorpus/evaluate.hpp"
#include "xcorpus/run_config.hpp"
#include "xcorpus/synth.hpp"
#include "xcorpus/vocab_sim.hpp"

namespace xcorpus::commands {

/// Every seed in a run is derive_seed(root, "<stage>/<name>").
std::uint64_t stage_seed(const RunConfig& cfg, std::string_view stage, std::string_view name);

/// Ingests and splits every configured dataset.
std::vector<corpus::LabeledDataset> load_datasets(const RunConfig& cfg, std::ostream* log = nullptr);

/// Per-classifier probability columns over every dataset.
struct BaseScores {
  std::vector<std::string> classifiers;
  std::vector<classify::ScoreColumn> columns;
  /// Builtin models keyed like `classifiers` (empty in external mode).
  std::vector<classify::LinearModel> models;
  std::vector<classify::TrainReport> reports;
  /// External "DM" score files, if any were supplied.
  std::vector<classify::ScoreColumn> dm_columns;

  const classify::ScoreColumn& column(std::string_view classifier, std::string_view dataset) const;
};

/// Trains one builtin model per dataset, or loads every *.csv in the external score directory.
BaseScores base_scores(const RunConfig& cfg, const std::vector<corpus::LabeledDataset>& datasets,
                       std::ostream* log = nullptr);

struct GridResult {
  evaluate::EvalGrid grid;
  vocab_sim::SimilarityMatrix sims;
  std::vector<evaluate::SimilarityAucPoint> points;
};

GridResult run_eval_grid(const RunConfig& cfg, const std::vector<corpus::LabeledDataset>& datasets,
                         const BaseScores& base);

struct EnsembleResult {
  ensemble::EnsembleReport report;
  std::optional<ensemble::CombinerModel> combiner;
  std::optional<classify::LinearModel> merged_model;
  /// DM probability columns, one per dataset.
  std::vector<classify::ScoreColumn> dm_columns;
};

/**
 * Evaluates the configured strategies on each dataset's test split. LL is
 * trained on the union of validation splits; DM trains one builtin model on
 * the merged datasets unless external DM scores were supplied.
 */
EnsembleResult run_ensemble(const RunConfig& cfg, const std::vector<corpus::LabeledDataset>& datasets,
                            const BaseScores& base, std::ostream* log = nullptr);

// Commands write into cfg.output_dir and either write every output or none.
void cmd_stats(const RunConfig& cfg, std::ostream* log = nullptr);
void cmd_similarity(const RunConfig& cfg, std::ostream* log = nullptr);
void cmd_tsne(const RunConfig& cfg, std::ostream* log = nullptr);
void cmd_train(const RunConfig& cfg, std::ostream* log = nullptr);
void cmd_eval_grid(const RunConfig& cfg, std::ostream* log = nullptr);
void cmd_ensemble(const RunConfig& cfg, std::ostream* log = nullptr);
synth::SyntheticFiles cmd_synth(const synth::SyntheticSpec& spec, const std::filesystem::path& dir);

}  // namespace xcorpus::commands
