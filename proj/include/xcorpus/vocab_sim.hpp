#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "xcorpus/corpus.hpp"

namespace xcorpus::vocab_sim {

/// "A+" / "A-" naming for the two class-corpora of dataset "A".
std::string class_corpus_name(std::string_view dataset, corpus::BinaryClass c);

/// Word counts per class-corpus plus the number of corpora containing each word.
struct CorpusIndex {
  std::vector<std::string> corpora;
  std::vector<std::unordered_map<std::string, std::uint64_t>> counts;
  std::unordered_map<std::string, std::uint32_t> doc_freq;

  std::size_t corpus_count() const { return corpora.size(); }
  /// Throws Error for an unknown name.
  std::size_t position(std::string_view corpus) const;
  std::vector<std::string> empty_corpora() const;
};

/// Two corpora per dataset (negative then positive), pooled over all splits.
CorpusIndex build_index(const std::vector<corpus::LabeledDataset>& datasets, int threads = 1);

/// Index over explicit token lists, one list per named corpus.
CorpusIndex index_from_tokens(std::vector<std::string> names,
                              const std::vector<std::vector<std::string>>& tokens);

/// (1 + ln count) * ln(corpora / doc_freq); 0 when count is 0.
double tfidf_weight(std::uint64_t count, std::size_t corpora, std::size_t doc_freq);

/// Sparse word weights sorted by word.
struct TermVector {
  std::string corpus;
  std::vector<std::pair<std::string, double>> weights;

  double norm() const;
};

TermVector tfidf(const CorpusIndex& index, std::string_view corpus);

/// Cosine over the union vocabulary; 0 when either vector is all zero.
double cosine(const TermVector& a, const TermVector& b);

struct SimilarityMatrix {
  std::vector<std::string> names;
  std::vector<double> values;  // row-major, names.size()^2

  double at(std::size_t i, std::size_t j) const { return values[i * names.size() + j]; }
  /// Throws Error for an unknown name.
  double at(std::string_view a, std::string_view b) const;
};

SimilarityMatrix similarity_matrix(const CorpusIndex& index, int threads = 1);

struct TopTerms {
  std::vector<std::pair<std::string, double>> terms;
  /// Set when the corpus has fewer than k distinct words.
  bool exhausted = false;
};

/// Highest weights first; equal weights in ascending word order. Throws for k == 0.
TopTerms top_k_terms(const CorpusIndex& index, std::string_view corpus, std::size_t k);

/// Lower triangle with diagonal, 3 decimals; first row and column are names.
void write_matrix_csv(std::ostream& out, const SimilarityMatrix& m);
nlohmann::json to_json(const SimilarityMatrix& m);

/// Rows word,corpus,weight.
void write_top_terms_csv(std::ostream& out,
                         const std::vector<std::pair<std::string, TopTerms>>& per_corpus);

}  // namespace xcorpus::vocab_sim
