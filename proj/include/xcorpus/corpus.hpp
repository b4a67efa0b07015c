#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace xcorpus::corpus {

enum class BinaryClass : std::uint8_t { negative = 0, positive = 1 };

std::string_view to_string(BinaryClass c);

enum class SplitPart : std::uint8_t { train = 0, val = 1, test = 2 };

std::string_view to_string(SplitPart p);
std::optional<SplitPart> parse_split_part(std::string_view text);

/// Maps a record's source labels onto the binary scheme.
struct MergeRule {
  enum class Mode { any, all };

  std::set<std::string> positive_labels;
  Mode mode = Mode::any;

  /// any: positive iff the label sets intersect.
  /// all: positive iff every positive label is present.
  BinaryClass apply(const std::set<std::string>& source_labels) const;

  static MergeRule from_json(const nlohmann::json& j);
  static MergeRule load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

using TokenStream = std::vector<std::string>;

struct Message {
  std::string id;
  std::string text;
  std::set<std::string> source_labels;
  BinaryClass binary_class = BinaryClass::negative;
  std::optional<SplitPart> predefined_split;
  TokenStream tokens;
};

struct LabeledDataset {
  std::string name;
  std::vector<Message> messages;
  std::optional<MergeRule> merge_rule;
  /// One entry per message once split; empty before.
  std::vector<SplitPart> assignment;
  std::uint64_t split_seed = 0;

  std::size_t size() const { return messages.size(); }
  bool is_split() const { return assignment.size() == messages.size() && !messages.empty(); }
  /// Message indices of one part, in dataset order.
  std::vector<std::size_t> indices(SplitPart part) const;
};

/**
 * Reads line-delimited JSON records {id, text, labels[, split]} and assigns
 * binary classes with `merge`. Record order is preserved and every message
 * is tokenized. Blank lines are skipped. Throws Error naming the line for a
 * malformed record and naming the id for a duplicate.
 */
LabeledDataset ingest(const std::filesystem::path& path, const MergeRule& merge,
                      std::string name, int threads = 1);
LabeledDataset ingest(std::istream& in, const MergeRule& merge, std::string name,
                      int threads = 1);

/// Sizes of a seeded split over n messages: {train, val, test}.
std::array<std::size_t, 3> split_sizes(std::size_t n);

/**
 * Seeded Fisher-Yates partition into test (20%), val (20% of the rest) and
 * train, sizes rounded half up. When every record carries a predefined split
 * the assignment is validated and kept as is.
 */
LabeledDataset split(LabeledDataset ds, std::uint64_t seed);

/**
 * Lowercases, splits on Unicode whitespace, peels leading and trailing
 * punctuation into single-character tokens and separates the contraction
 * suffixes n't 're 'll 've 's 'd 'm.
 */
TokenStream tokenize(std::string_view text);

struct ClassStats {
  std::size_t message_count = 0;
  std::size_t unique_words = 0;
  std::size_t total_words = 0;
};

/// Indexed by BinaryClass.
std::array<ClassStats, 2> class_stats(const LabeledDataset& ds);

/// CSV header dataset,class,messages,unique_words,total_words; negative row first.
void write_stats_csv(std::ostream& out, const std::vector<LabeledDataset>& datasets);

}  // namespace xcorpus::corpus
