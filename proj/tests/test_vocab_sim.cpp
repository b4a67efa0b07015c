#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "xcorpus/error.hpp"
#include "xcorpus/rng.hpp"
#include "xcorpus/vocab_sim.hpp"

using namespace xcorpus;
using namespace xcorpus::vocab_sim;

namespace {

using Tokens = std::vector<std::vector<std::string>>;

// Dense recount: weight[d][w] straight from the definition.
std::vector<std::map<std::string, double>> dense_tfidf(const Tokens& corpora) {
  std::map<std::string, std::vector<double>> counts;
  for (std::size_t d = 0; d < corpora.size(); ++d)
    for (const auto& w : corpora[d]) {
      auto& c = counts[w];
      c.resize(corpora.size(), 0.0);
      c[d] += 1.0;
    }
  std::vector<std::map<std::string, double>> out(corpora.size());
  const double D = static_cast<double>(corpora.size());
  for (const auto& [w, c] : counts) {
    double dw = 0;
    for (double n : c) dw += n > 0 ? 1 : 0;
    for (std::size_t d = 0; d < c.size(); ++d)
      out[d][w] = c[d] > 0 ? (1.0 + std::log(c[d])) * std::log(D / dw) : 0.0;
  }
  return out;
}

double dense_cosine(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (const auto& [w, x] : a) {
    na += x * x;
    const auto it = b.find(w);
    if (it != b.end()) dot += x * it->second;
  }
  for (const auto& [w, y] : b) nb += y * y;
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

Tokens random_corpora(Rng& rng) {
  const std::size_t n = 2 + rng.below(5);
  const std::size_t vocab = 3 + rng.below(20);
  Tokens t(n);
  for (auto& c : t) {
    const auto len = rng.below(101);
    for (std::uint64_t i = 0; i < len; ++i) c.push_back("w" + std::to_string(rng.below(vocab)));
  }
  return t;
}

std::vector<std::string> names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("c" + std::to_string(i));
  return out;
}

}  // namespace

TEST_CASE("tfidf weight") {
  CHECK(tfidf_weight(10, 16, 4) == doctest::Approx(4.5786).epsilon(1e-4));
  CHECK(tfidf_weight(0, 16, 4) == 0.0);
  CHECK(tfidf_weight(7, 16, 16) == 0.0);
}

TEST_CASE("cosine examples") {
  TermVector a{"a", {{"x", 1.0}, {"y", 1.0}}};
  TermVector b{"b", {{"x", 1.0}}};
  CHECK(cosine(a, b) == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(cosine(a, a) == doctest::Approx(1.0));
  CHECK(cosine(a, TermVector{"c", {{"z", 2.0}}}) == 0.0);
  CHECK(cosine(a, TermVector{"e", {}}) == 0.0);
}

TEST_CASE("index document frequencies count class-corpora") {
  const auto idx = index_from_tokens({"A-", "A+"}, {{"x", "y"}, {"x", "z", "z"}});
  CHECK(idx.corpus_count() == 2);
  CHECK(idx.doc_freq.at("x") == 2);
  CHECK(idx.doc_freq.at("z") == 1);
  CHECK_THROWS_AS(idx.position("B+"), Error);
  CHECK_THROWS_AS(tfidf(idx, "nope"), Error);
}

TEST_CASE("tfidf and similarity match a dense oracle") {
  Rng rng(2024);
  for (int trial = 0; trial < 150; ++trial) {
    const auto corpora = random_corpora(rng);
    const auto idx = index_from_tokens(names(corpora.size()), corpora);
    const auto oracle = dense_tfidf(corpora);
    for (std::size_t d = 0; d < corpora.size(); ++d) {
      const auto tv = tfidf(idx, idx.corpora[d]);
      for (const auto& [w, x] : tv.weights) {
        CHECK(x >= 0.0);
        CHECK(std::abs(x - oracle[d].at(w)) <= 1e-12);
      }
      for (const auto& [w, x] : oracle[d])
        if (x != 0.0)
          CHECK(std::find_if(tv.weights.begin(), tv.weights.end(), [&](const auto& p) { return p.first == w; }) !=
                tv.weights.end());
    }
    const auto m = similarity_matrix(idx, 2);
    for (std::size_t i = 0; i < corpora.size(); ++i)
      for (std::size_t j = 0; j < corpora.size(); ++j) {
        const double expect = i == j ? (dense_cosine(oracle[i], oracle[i]) > 0 ? 1.0 : 0.0)
                                     : dense_cosine(oracle[i], oracle[j]);
        CHECK(std::abs(m.at(i, j) - expect) <= 1e-12);
        CHECK(m.at(i, j) == m.at(j, i));
        CHECK(m.at(i, j) >= 0.0);
        CHECK(m.at(i, j) <= 1.0);
      }
  }
}

TEST_CASE("scaling a term vector leaves cosines unchanged") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto corpora = random_corpora(rng);
    const auto idx = index_from_tokens(names(corpora.size()), corpora);
    const auto a = tfidf(idx, idx.corpora[0]);
    auto scaled = a;
    const double c = 0.01 + 100.0 * rng.uniform();
    for (auto& [w, x] : scaled.weights) x *= c;
    for (std::size_t j = 1; j < corpora.size(); ++j) {
      const auto b = tfidf(idx, idx.corpora[j]);
      CHECK(std::abs(cosine(a, b) - cosine(scaled, b)) <= 1e-12);
    }
  }
}

TEST_CASE("disjoint and empty corpora") {
  const auto idx = index_from_tokens({"p", "q", "e"}, {{"a", "b"}, {"c"}, {}});
  const auto m = similarity_matrix(idx);
  CHECK(m.at("p", "q") == 0.0);
  CHECK(m.at("p", "p") == 1.0);
  CHECK(m.at("e", "e") == 0.0);
  CHECK(idx.empty_corpora() == std::vector<std::string>{"e"});
}

TEST_CASE("top k terms") {
  const auto idx = index_from_tokens({"x", "y"}, {{"b", "a", "s"}, {"s"}});
  SUBCASE("equal weights in word order") {
    const auto t = top_k_terms(idx, "x", 2);
    REQUIRE(t.terms.size() == 2);
    CHECK(t.terms[0].first == "a");
    CHECK(t.terms[1].first == "b");
    CHECK_FALSE(t.exhausted);
  }
  SUBCASE("exhaustion is flagged") {
    const auto t = top_k_terms(index_from_tokens({"x", "y"}, {{"u", "v"}, {"w"}}), "x", 5);
    CHECK(t.terms.size() == 2);
    CHECK(t.exhausted);
  }
  SUBCASE("descending weight") {
    const auto idx2 = index_from_tokens({"x", "y"}, {{"a", "b", "b", "b"}, {"c"}});
    const auto t = top_k_terms(idx2, "x", 2);
    CHECK(t.terms[0].first == "b");
    CHECK(t.terms[0].second > t.terms[1].second);
  }
  CHECK_THROWS_AS(top_k_terms(idx, "x", 0), Error);
}

TEST_CASE("matrix csv keeps the lower triangle") {
  const auto idx = index_from_tokens({"A-", "A+"}, {{"a", "b"}, {"a", "c"}});
  std::ostringstream out;
  write_matrix_csv(out, similarity_matrix(idx));
  CHECK(out.str() == ",A-,A+\nA-,1.000,\nA+,0.000,1.000\n");
}
