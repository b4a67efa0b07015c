#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "xcorpus/classify.hpp"
#include "xcorpus/corpus.hpp"
#include "xcorpus/vocab_sim.hpp"

namespace xcorpus::evaluate {

using corpus::BinaryClass;

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  bool operator==(const Confusion&) const = default;
};

/// Predicted positive iff p_pos >= threshold. Spans must have equal length.
Confusion confusion(std::span<const double> p_pos, std::span<const BinaryClass> truths,
                    double threshold = 0.5);

/// Id-keyed variant; throws Error when the two id sets differ.
Confusion confusion(const std::unordered_map<std::string, classify::ProbPair>& scores,
                    const std::unordered_map<std::string, BinaryClass>& truths,
                    double threshold = 0.5);

/// Undefined ratios (0/0) are absent rather than 0.
struct Metrics {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

Metrics precision_recall_f1(const Confusion& c);

/**
 * Probability that a random positive outranks a random negative, ties
 * counted one half. Rank-based, O(n log n), and exact: the doubled
 * Mann-Whitney statistic is accumulated in integers. Throws Error when
 * either class is missing.
 */
double auc(std::span<const double> p_pos, std::span<const BinaryClass> truths);

/// Scores and truths for one split of a dataset, in dataset order.
struct LabeledScores {
  std::vector<std::string> ids;
  std::vector<double> p_pos;
  std::vector<BinaryClass> truths;
};

/// Throws Error naming the (classifier, dataset) pair when ids are missing.
LabeledScores gather(const classify::ScoreColumn& column, const corpus::LabeledDataset& ds,
                     corpus::SplitPart part);

enum class Metric { precision = 0, recall = 1, f1 = 2, auc = 3 };

std::string_view to_string(Metric m);

struct EvalCell {
  std::string trained_on;
  std::string tested_on;
  Confusion counts;
  Metrics metrics;
  std::optional<double> auc;
  /// Column maximum flags, indexed by Metric.
  std::array<bool, 4> best{};

  std::optional<double> value(Metric m) const;
};

struct EvalGrid {
  std::vector<std::string> classifiers;
  std::vector<std::string> datasets;
  std::vector<EvalCell> cells;  // row-major: classifier x dataset

  const EvalCell& at(std::size_t row, std::size_t col) const { return cells[row * datasets.size() + col]; }
  const EvalCell& at(std::string_view classifier, std::string_view dataset) const;
};

/// Marks every cell equal to its column's maximum, per metric.
void mark_column_best(EvalGrid& grid);

/**
 * Evaluates every classifier on every dataset's test split. `columns` may
 * be in any order but must hold one column per (classifier, dataset) pair.
 */
EvalGrid cross_grid(const std::vector<std::string>& classifiers,
                    const std::vector<classify::ScoreColumn>& columns,
                    const std::vector<corpus::LabeledDataset>& datasets, int threads = 1);

struct SimilarityAucPoint {
  std::string trained_on;
  std::string tested_on;
  double sim_pos = 0.0;
  double sim_neg = 0.0;
  std::optional<double> auc;
};

/// One point per grid cell; classifier names must be dataset names in `sims`.
std::vector<SimilarityAucPoint> similarity_auc_export(const EvalGrid& grid,
                                                      const vocab_sim::SimilarityMatrix& sims);

/// Rows = classifiers, columns = test datasets, 2 decimals, '*' marks a column best.
void write_grid_csv(std::ostream& out, const EvalGrid& grid, Metric metric,
                    std::string_view row_header = "trained_on");
nlohmann::json to_json(const EvalGrid& grid);
void write_similarity_auc_csv(std::ostream& out, const std::vector<SimilarityAucPoint>& points);

}  // namespace xcorpus::evaluate
