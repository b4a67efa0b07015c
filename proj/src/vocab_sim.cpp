#include "xcorpus/vocab_sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "xcorpus/error.hpp"
#include "xcorpus/parallel.hpp"
#include "xcorpus/text_io.hpp"

namespace xcorpus::vocab_sim {

using corpus::BinaryClass;

std::string class_corpus_name(std::string_view dataset, BinaryClass c) {
  return std::string(dataset) + (c == BinaryClass::positive ? "+" : "-");
}

std::size_t CorpusIndex::position(std::string_view corpus) const {
  const auto it = std::find(corpora.begin(), corpora.end(), corpus);
  if (it == corpora.end()) throw Error("unknown corpus \"" + std::string(corpus) + "\"");
  return static_cast<std::size_t>(it - corpora.begin());
}

std::vector<std::string> CorpusIndex::empty_corpora() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < corpora.size(); ++i)
    if (counts[i].empty()) out.push_back(corpora[i]);
  return out;
}

namespace {

void fill_doc_freq(CorpusIndex& index) {
  index.doc_freq.clear();
  for (const auto& c : index.counts)
    for (const auto& [word, n] : c) ++index.doc_freq[word];
}

}  // namespace

CorpusIndex build_index(const std::vector<corpus::LabeledDataset>& datasets, int threads) {
  CorpusIndex index;
  index.corpora.resize(2 * datasets.size());
  index.counts.resize(2 * datasets.size());
  parallel_for(datasets.size(), threads, [&](std::size_t d) {
    const auto& ds = datasets[d];
    index.corpora[2 * d] = class_corpus_name(ds.name, BinaryClass::negative);
    index.corpora[2 * d + 1] = class_corpus_name(ds.name, BinaryClass::positive);
    for (const auto& m : ds.messages) {
      auto& counts = index.counts[2 * d + static_cast<std::size_t>(m.binary_class)];
      for (const auto& t : m.tokens) ++counts[t];
    }
  });
  fill_doc_freq(index);
  return index;
}

CorpusIndex index_from_tokens(std::vector<std::string> names,
                              const std::vector<std::vector<std::string>>& tokens) {
  if (names.size() != tokens.size()) throw Error("corpus names and token lists differ in length");
  CorpusIndex index;
  index.corpora = std::move(names);
  index.counts.resize(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i)
    for (const auto& t : tokens[i]) ++index.counts[i][t];
  fill_doc_freq(index);
  return index;
}

double tfidf_weight(std::uint64_t count, std::size_t corpora, std::size_t doc_freq) {
  if (count == 0 || doc_freq == 0) return 0.0;
  return (1.0 + std::log(static_cast<double>(count))) *
         std::log(static_cast<double>(corpora) / static_cast<double>(doc_freq));
}

double TermVector::norm() const {
  double sum = 0.0;
  for (const auto& [word, w] : weights) sum += w * w;
  return std::sqrt(sum);
}

TermVector tfidf(const CorpusIndex& index, std::string_view corpus) {
  const std::size_t pos = index.position(corpus);
  TermVector v;
  v.corpus = index.corpora[pos];
  v.weights.reserve(index.counts[pos].size());
  for (const auto& [word, n] : index.counts[pos])
    v.weights.emplace_back(word, tfidf_weight(n, index.corpus_count(), index.doc_freq.at(word)));
  std::sort(v.weights.begin(), v.weights.end());
  return v;
}

double cosine(const TermVector& a, const TermVector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  double dot = 0.0;
  auto ia = a.weights.begin();
  auto ib = b.weights.begin();
  while (ia != a.weights.end() && ib != b.weights.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      dot += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return std::clamp(dot / (na * nb), 0.0, 1.0);
}

double SimilarityMatrix::at(std::string_view a, std::string_view b) const {
  const auto find = [&](std::string_view name) {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw Error("similarity matrix has no corpus \"" + std::string(name) + "\"");
    return static_cast<std::size_t>(it - names.begin());
  };
  return at(find(a), find(b));
}

SimilarityMatrix similarity_matrix(const CorpusIndex& index, int threads) {
  const std::size_t n = index.corpus_count();
  std::vector<TermVector> vectors(n);
  std::vector<double> norms(n);
  parallel_for(n, threads, [&](std::size_t i) {
    vectors[i] = tfidf(index, index.corpora[i]);
    norms[i] = vectors[i].norm();
  });
  SimilarityMatrix m;
  m.names = index.corpora;
  m.values.assign(n * n, 0.0);
  parallel_for(n, threads, [&](std::size_t i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double c = (i == j) ? (norms[i] > 0.0 ? 1.0 : 0.0) : cosine(vectors[i], vectors[j]);
      m.values[i * n + j] = c;
    }
  });
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m.values[i * n + j] = m.values[j * n + i];
  return m;
}

TopTerms top_k_terms(const CorpusIndex& index, std::string_view corpus, std::size_t k) {
  if (k == 0) throw Error("top-k needs k >= 1");
  TermVector v = tfidf(index, corpus);
  auto by_weight = [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  };
  TopTerms out;
  out.exhausted = v.weights.size() < k;
  const std::size_t keep = std::min(k, v.weights.size());
  std::partial_sort(v.weights.begin(), v.weights.begin() + static_cast<std::ptrdiff_t>(keep),
                    v.weights.end(), by_weight);
  v.weights.resize(keep);
  out.terms = std::move(v.weights);
  return out;
}

void write_matrix_csv(std::ostream& out, const SimilarityMatrix& m) {
  const std::size_t n = m.names.size();
  for (const auto& name : m.names) out << ',' << csv_field(name);
  out << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    out << csv_field(m.names[i]);
    for (std::size_t j = 0; j < n; ++j) {
      out << ',';
      if (j <= i) out << format_fixed(m.at(i, j), 3);
    }
    out << '\n';
  }
}

nlohmann::json to_json(const SimilarityMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  const std::size_t n = m.names.size();
  for (std::size_t i = 0; i < n; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < n; ++j) row.push_back(m.at(i, j));
    rows.push_back(std::move(row));
  }
  return {{"names", m.names}, {"values", std::move(rows)}};
}

void write_top_terms_csv(std::ostream& out,
                         const std::vector<std::pair<std::string, TopTerms>>& per_corpus) {
  out << "word,corpus,weight\n";
  for (const auto& [corpus, top] : per_corpus)
    for (const auto& [word, weight] : top.terms)
      out << csv_field(word) << ',' << csv_field(corpus) << ',' << format_fixed(weight, 6) << '\n';
}

}  // namespace xcorpus::vocab_sim
