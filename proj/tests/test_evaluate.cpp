#include <doctest.h>

#include <cmath>
#include <sstream>

#include "xcorpus/error.hpp"
#include "xcorpus/evaluate.hpp"
#include "xcorpus/rng.hpp"

using namespace xcorpus;
using namespace xcorpus::evaluate;

namespace {

double brute_auc(const std::vector<double>& s, const std::vector<BinaryClass>& y) {
  double wins = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == BinaryClass::positive && y[j] == BinaryClass::negative) {
        ++pairs;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return wins / static_cast<double>(pairs);
}

struct Instance {
  std::vector<double> scores;
  std::vector<BinaryClass> truths;
};

Instance random_instance(Rng& rng, std::size_t max_n, bool coarse) {
  Instance in;
  std::size_t n = 2 + rng.below(max_n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    in.scores.push_back(coarse ? static_cast<double>(rng.below(5)) / 4.0 : rng.uniform());
    in.truths.push_back(rng.bernoulli(0.4) ? BinaryClass::positive : BinaryClass::negative);
  }
  in.truths[0] = BinaryClass::positive;
  in.truths[1] = BinaryClass::negative;
  return in;
}

BinaryClass flip(BinaryClass c) {
  return c == BinaryClass::positive ? BinaryClass::negative : BinaryClass::positive;
}

}  // namespace

TEST_CASE("auc equals the all-pairs oracle exactly") {
  Rng rng(404);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto in = random_instance(rng, 200, trial % 2 == 0);
    CHECK(auc(in.scores, in.truths) == brute_auc(in.scores, in.truths));
  }
}

TEST_CASE("auc examples and errors") {
  using B = BinaryClass;
  CHECK(auc(std::vector<double>{0.9, 0.1}, std::vector<B>{B::positive, B::negative}) == 1.0);
  CHECK(auc(std::vector<double>{0.1, 0.9}, std::vector<B>{B::positive, B::negative}) == 0.0);
  CHECK(auc(std::vector<double>{0.5, 0.5}, std::vector<B>{B::positive, B::negative}) == 0.5);
  CHECK_THROWS_AS(auc(std::vector<double>{0.5, 0.2}, std::vector<B>{B::positive, B::positive}), Error);
}

TEST_CASE("auc is invariant under strictly monotone transforms") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const auto in = random_instance(rng, 100, trial % 3 == 0);
    std::vector<double> t;
    for (double s : in.scores) t.push_back(std::exp(3.0 * s) - 7.0);
    CHECK(auc(t, in.truths) == auc(in.scores, in.truths));
  }
}

TEST_CASE("confusion counts match a per-message recount") {
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const auto in = random_instance(rng, 60, trial % 2 == 0);
    Confusion oracle;
    for (std::size_t i = 0; i < in.scores.size(); ++i) {
      const bool pred = in.scores[i] >= 0.5, truth = in.truths[i] == BinaryClass::positive;
      (pred ? (truth ? oracle.tp : oracle.fp) : (truth ? oracle.fn : oracle.tn))++;
    }
    const auto c = confusion(in.scores, in.truths);
    CHECK(c == oracle);
    const auto m = precision_recall_f1(c);
    if (c.tp + c.fp > 0) CHECK(*m.precision == static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp));
    else CHECK_FALSE(m.precision.has_value());
    if (c.tp + c.fn > 0) CHECK(*m.recall == static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn));
  }
}

TEST_CASE("swapping classes maps recall to specificity") {
  Rng rng(55);
  for (int trial = 0; trial < 200; ++trial) {
    const auto in = random_instance(rng, 50, false);
    std::vector<double> swapped_scores;
    std::vector<BinaryClass> swapped_truths;
    for (std::size_t i = 0; i < in.scores.size(); ++i) {
      // Predictions flip exactly when the score is mirrored strictly below 0.5.
      swapped_scores.push_back(in.scores[i] >= 0.5 ? 0.0 : 1.0);
      swapped_truths.push_back(flip(in.truths[i]));
    }
    const auto c = confusion(in.scores, in.truths);
    const auto s = precision_recall_f1(confusion(swapped_scores, swapped_truths));
    if (c.tn + c.fp > 0)
      CHECK(*s.recall == static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp));
  }
}

TEST_CASE("undefined metrics are absent") {
  const auto m = precision_recall_f1(Confusion{0, 0, 5, 0});
  CHECK_FALSE(m.precision.has_value());
  CHECK_FALSE(m.recall.has_value());
  CHECK_FALSE(m.f1.has_value());
  const auto p = precision_recall_f1(Confusion{3, 1, 4, 2});
  CHECK(*p.precision == 0.75);
  CHECK(*p.recall == 0.6);
  CHECK(*p.f1 == doctest::Approx(2 * 0.75 * 0.6 / 1.35));
}

TEST_CASE("id keyed confusion rejects mismatched ids") {
  std::unordered_map<std::string, classify::ProbPair> scores{{"a", {0.2, 0.8}}, {"b", {0.9, 0.1}}};
  std::unordered_map<std::string, BinaryClass> truths{{"a", BinaryClass::positive}, {"b", BinaryClass::positive}};
  CHECK(confusion(scores, truths) == Confusion{1, 0, 0, 1});
  truths.erase("b");
  truths["c"] = BinaryClass::negative;
  CHECK_THROWS_AS(confusion(scores, truths), Error);
}

TEST_CASE("column bests and grid csv") {
  EvalGrid g;
  g.classifiers = {"A", "B"};
  g.datasets = {"A", "B"};
  const auto cell = [](std::string tr, std::string te, Confusion c, double a) {
    EvalCell e;
    e.trained_on = std::move(tr);
    e.tested_on = std::move(te);
    e.counts = c;
    e.metrics = precision_recall_f1(c);
    e.auc = a;
    return e;
  };
  g.cells = {cell("A", "A", {9, 1, 8, 2}, 0.95), cell("A", "B", {1, 0, 9, 9}, 0.6),
             cell("B", "A", {5, 5, 5, 5}, 0.5), cell("B", "B", {9, 0, 9, 1}, 0.99)};
  mark_column_best(g);
  CHECK(g.at(0, 0).best[static_cast<int>(Metric::precision)]);
  CHECK(g.at(1, 1).best[static_cast<int>(Metric::recall)]);
  CHECK(g.at(0, 1).best[static_cast<int>(Metric::precision)]);
  CHECK(g.at(1, 1).best[static_cast<int>(Metric::precision)]);
  std::ostringstream out;
  write_grid_csv(out, g, Metric::recall);
  CHECK(out.str() == "trained_on,A,B\nA,0.82*,0.10\nB,0.50,0.90*\n");
}

TEST_CASE("similarity export covers every cell") {
  EvalGrid g;
  g.classifiers = {"A", "B"};
  g.datasets = {"A", "B"};
  for (const auto& tr : g.classifiers)
    for (const auto& te : g.datasets) {
      EvalCell e;
      e.trained_on = tr;
      e.tested_on = te;
      g.cells.push_back(e);
    }
  vocab_sim::SimilarityMatrix m;
  m.names = {"A-", "A+", "B-", "B+"};
  m.values = {1, 0.2, 0.4, 0.1,  //
              0.2, 1, 0.3, 0.6,  //
              0.4, 0.3, 1, 0.25,  //
              0.1, 0.6, 0.25, 1};
  const auto pts = similarity_auc_export(g, m);
  REQUIRE(pts.size() == 4);
  CHECK(pts[0].sim_pos == 1.0);
  CHECK(pts[0].sim_neg == 1.0);
  CHECK(pts[1].trained_on == "A");
  CHECK(pts[1].tested_on == "B");
  CHECK(pts[1].sim_pos == 0.6);
  CHECK(pts[1].sim_neg == 0.4);
  m.names[3] = "C+";
  CHECK_THROWS_AS(similarity_auc_export(g, m), Error);
}
