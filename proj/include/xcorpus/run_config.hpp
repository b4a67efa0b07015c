#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "xcorpus/classify.hpp"
#include "xcorpus/corpus.hpp"
#include "xcorpus/embed_project.hpp"
#include "xcorpus/ensemble.hpp"
#include "xcorpus/error.hpp"

namespace xcorpus {

/// Configuration that cannot describe a runnable pipeline (exit code 2).
class UsageError : public Error {
 public:
  using Error::Error;
};

struct DatasetSpec {
  std::string name;
  std::filesystem::path path;
  corpus::MergeRule merge_rule;
  /// Keep the split carried by the records instead of drawing one.
  bool predefined_split = false;
};

struct RunConfig {
  std::vector<DatasetSpec> datasets;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> embedding_path;
  /// Directory of external score files; builtin linear model when empty.
  std::optional<std::filesystem::path> external_scores;
  std::vector<ensemble::Strategy> ensemble_set{std::begin(ensemble::kAllStrategies),
                                               std::end(ensemble::kAllStrategies)};
  std::size_t top_k = 30;
  classify::TrainConfig train;
  embed::ProjectionConfig tsne;
  int threads = 1;

  /**
   * Parses the JSON form. Relative paths resolve against `base_dir`;
   * "merge_rule" may be an inline object or a path to a rule file, and
   * "classifier" is "builtin_linear" or "external:<dir>".
   */
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);

  /// Throws UsageError for an empty or duplicate dataset list.
  void validate() const;
};

}  // namespace xcorpus
