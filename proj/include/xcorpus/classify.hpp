#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "xcorpus/corpus.hpp"

namespace xcorpus::classify {

inline constexpr std::uint32_t kHashBuckets = 1u << 18;
/// Character presence slots, in slot order.
inline constexpr std::string_view kCharTable =
    "abcdefghijklmnopqrstuvwxyz0123456789!\"#$%&'()*+,-./:;?@[]_~ ";
inline constexpr std::uint32_t kCharSlots = 60;
inline constexpr std::uint32_t kFeatureDim = kHashBuckets + kCharSlots;
static_assert(kCharTable.size() == kCharSlots);

/// Sparse (index, value) entries sorted by index.
struct FeatureVector {
  std::vector<std::pair<std::uint32_t, double>> entries;
};

/// FNV-1a 64 of the token, reduced to a bucket.
std::uint32_t hash_bucket(std::string_view token);

/// Slot of a character in kCharTable (ASCII letters case-folded), or -1.
int char_slot(char c);

/**
 * Hashed unigram block (1 + ln count per distinct token, colliding tokens
 * add) followed by a binary presence block over kCharTable computed on the
 * raw text.
 */
FeatureVector featurize(const corpus::TokenStream& tokens, std::string_view raw_text);

struct ProbPair {
  double p_neg = 0.5;
  double p_pos = 0.5;
};

ProbPair softmax(double logit_neg, double logit_pos);

/// Two-class softmax regression; row c of `weights` scores class c.
struct LinearModel {
  std::size_t dim = 0;
  std::vector<double> weights;  // 2 x dim, row-major
  std::array<double, 2> bias{0.0, 0.0};

  LinearModel() = default;
  explicit LinearModel(std::size_t d) : dim(d), weights(2 * d, 0.0) {}

  double& w(std::size_t cls, std::size_t idx) { return weights[cls * dim + idx]; }
  double w(std::size_t cls, std::size_t idx) const { return weights[cls * dim + idx]; }
  std::array<double, 2> logits(const FeatureVector& x) const;
  bool all_finite() const;
};

ProbPair predict(const LinearModel& model, const FeatureVector& x);

/// Mean cross-entropy plus (l2 / 2) * |W|^2; the bias is not regularized.
double batch_loss(const LinearModel& model, std::span<const FeatureVector> xs,
                  std::span<const corpus::BinaryClass> ys, double l2);

/// Gradient of batch_loss, shaped like the model.
LinearModel batch_gradient(const LinearModel& model, std::span<const FeatureVector> xs,
                           std::span<const corpus::BinaryClass> ys, double l2);

struct TrainConfig {
  double learning_rate = 0.05;
  double lr_decay_per_epoch = 0.6;
  int epochs = 15;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  double l2 = 1e-6;
  /// Inverted dropout on input entries, training only.
  double input_dropout = 0.0;
  int threads = 1;

  void validate() const;
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig defaults);
};

struct TrainingData {
  std::vector<std::string> ids;
  std::vector<FeatureVector> features;
  std::vector<corpus::BinaryClass> labels;

  std::size_t size() const { return ids.size(); }
};

TrainingData featurize_part(const corpus::LabeledDataset& ds, corpus::SplitPart part, int threads = 1);

struct TrainReport {
  /// Validation F1 per epoch; NaN when undefined or no validation data.
  std::vector<double> val_f1;
  int selected_epoch = -1;
};

/**
 * Mini-batch SGD on batch_loss. The learning rate is a per-example step: a
 * batch of b examples moves the parameters by lr * b * gradient. Each epoch visits the examples in id order
 * shuffled by a seed derived from (seed, epoch), so input order does not
 * matter; the rate is multiplied by the decay after every epoch. Returns the
 * epoch checkpoint with the best validation F1 (first wins ties), or the
 * last one when validation F1 is never defined. Gradient reduction is in
 * batch order regardless of thread count.
 */
LinearModel fit(std::size_t dim, const TrainingData& train, const TrainingData* val,
                const TrainConfig& cfg, TrainReport* report = nullptr);

/// fit() on the train split with the val split for checkpoint selection.
/// Throws Error naming the dataset when the train split is empty or single-class.
LinearModel train(const corpus::LabeledDataset& ds, const TrainConfig& cfg,
                  TrainReport* report = nullptr);

nlohmann::json feature_space_descriptor();

nlohmann::json model_to_json(const LinearModel& model, std::string_view format,
                             const nlohmann::json& feature_space);
/// Throws Error on a format/version mismatch.
LinearModel model_from_json(const nlohmann::json& j, std::string_view format,
                            nlohmann::json* feature_space = nullptr);

void save_model(std::ostream& out, const LinearModel& model);
LinearModel load_model(const std::filesystem::path& path);

/// Probability pairs from one classifier over (part of) one dataset.
struct ScoreColumn {
  std::string classifier;
  std::string dataset;
  std::unordered_map<std::string, ProbPair> scores;

  /// Throws Error when `id` is missing.
  const ProbPair& at(const std::string& id) const;
};

ScoreColumn score_dataset(const LinearModel& model, std::string classifier,
                          const corpus::LabeledDataset& ds, int threads = 1);

/**
 * External score CSV: a first line "<classifier>,<dataset>" (optionally
 * preceded by the literal header "classifier,dataset"), an optional
 * "message_id,p_pos" header, then one "<id>,<p_pos>" per line. Every id must
 * belong to `ds`, the dataset name must match, p_pos must lie in [0, 1] and
 * all test-split ids must be covered.
 */
ScoreColumn load_external_scores(std::istream& in, const corpus::LabeledDataset& ds);
ScoreColumn load_external_scores(const std::filesystem::path& path, const corpus::LabeledDataset& ds);

/// Reads only the "<classifier>,<dataset>" header of an external score file.
std::pair<std::string, std::string> peek_score_header(const std::filesystem::path& path);

}  // namespace xcorpus::classify
