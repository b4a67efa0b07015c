#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace xcorpus::synth {

struct SyntheticSpec {
  int n_datasets = 3;
  int messages_per_dataset = 3000;
  int vocab_size = 400;
  double positive_rate = 0.3;
  /// Probability that a positive message carries one of its dataset's signal words.
  double class_signal_strength = 1.0;
  int signal_words_per_dataset = 5;
  /// Neutral words that occur in only one class of a given dataset (per class).
  int skewed_words_per_class = 10;
  int embedding_dim = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticRecord {
  std::string id;
  std::string text;
  std::vector<std::string> labels;
};

struct SyntheticDataset {
  std::string name;
  std::vector<std::string> positive_labels;
  std::vector<std::string> signal_words;
  std::vector<SyntheticRecord> records;
};

/**
 * Datasets named A, B, C, ... sharing a Zipf-distributed neutral vocabulary.
 * Each dataset owns a disjoint signal vocabulary that only its positive
 * messages use, and a few neutral words that it only ever uses in one class.
 * Deterministic in the spec.
 */
std::vector<SyntheticDataset> generate(const SyntheticSpec& spec);

struct SyntheticFiles {
  std::vector<std::filesystem::path> datasets;
  std::filesystem::path embeddings;
  std::filesystem::path config;
};

/**
 * Writes <name>.jsonl per dataset, embeddings.vec (text vector format, one
 * cluster per dataset's signal words) and config.json referencing them.
 */
SyntheticFiles write_synthetic(const SyntheticSpec& spec, const std::filesystem::path& dir);

}  // namespace xcorpus::synth
