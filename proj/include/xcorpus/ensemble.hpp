#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "xcorpus/classify.hpp"
#include "xcorpus/corpus.hpp"
#include "xcorpus/evaluate.hpp"

namespace xcorpus::ensemble {

using classify::ProbPair;
using corpus::BinaryClass;

/// K probability pairs for one message, one per base classifier.
using EnsembleInput = std::vector<ProbPair>;

/// Argmax of one pair; an exact tie is negative.
BinaryClass argmax(const ProbPair& p);

/// Majority of per-classifier argmax votes; a tied vote is negative.
BinaryClass democratic_vote(std::span<const ProbPair> input);

/// Positive iff the summed p_pos exceeds the summed p_neg.
BinaryClass sum_vote(std::span<const ProbPair> input);

/// Argmax of the most confident classifier; the lowest index wins ties.
BinaryClass max_wins(std::span<const ProbPair> input);

struct ThresholdPolicy {
  enum class Fallback { negative, max_wins };

  double tau = 0.5;
  Fallback fallback = Fallback::negative;
};

/// Positive if any p_pos >= tau, otherwise the fallback verdict.
BinaryClass threshold_vote(std::span<const ProbPair> input, const ThresholdPolicy& policy);

/// Dense (p_neg, p_pos) * K input block for the linear combiner.
classify::FeatureVector combiner_features(std::span<const ProbPair> input);

/// Linear layer over the concatenated pairs.
struct CombinerModel {
  std::vector<std::string> classifiers;
  classify::LinearModel linear;
  double dropout_rate = 0.5;

  ProbPair predict(std::span<const ProbPair> input) const;
  BinaryClass verdict(std::span<const ProbPair> input) const { return argmax(predict(input)); }
};

/**
 * Trains the combiner with classify::fit on the per-message inputs, with
 * inverted dropout on the inputs during training. `ids` key the epoch
 * shuffles. Throws Error for single-class data.
 */
CombinerModel train_combiner(const std::vector<std::string>& classifiers,
                             const std::vector<std::string>& ids,
                             const std::vector<EnsembleInput>& inputs,
                             const std::vector<BinaryClass>& truths, classify::TrainConfig cfg,
                             double dropout_rate = 0.5);

void save_combiner(std::ostream& out, const CombinerModel& model);
CombinerModel load_combiner(std::istream& in);

/**
 * Concatenates datasets keeping each message's split; ids become
 * "<dataset>/<id>". Needs at least two split datasets; throws Error on an
 * id collision.
 */
corpus::LabeledDataset merge_datasets(const std::vector<corpus::LabeledDataset>& datasets,
                                      std::string name);

enum class Strategy { LL, DV, SV, MW, T05, T095, DM };

inline constexpr Strategy kAllStrategies[] = {Strategy::LL,  Strategy::DV,   Strategy::SV, Strategy::MW,
                                              Strategy::T05, Strategy::T095, Strategy::DM};

std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view text);

/// Verdict of an untrained combiner (DV, SV, MW, T0.5, T0.95).
BinaryClass combine(Strategy s, std::span<const ProbPair> input);

/// Strategy x test-dataset confusion table.
struct EnsembleReport {
  std::vector<Strategy> strategies;
  std::vector<std::string> datasets;
  std::vector<evaluate::Confusion> counts;  // row-major

  const evaluate::Confusion& at(std::size_t row, std::size_t col) const {
    return counts[row * datasets.size() + col];
  }
};

/// Rows = strategies, columns = datasets, 2 decimals, '*' marks a column best.
void write_report_csv(std::ostream& out, const EnsembleReport& report, evaluate::Metric metric);
nlohmann::json to_json(const EnsembleReport& report);

}  // namespace xcorpus::ensemble
