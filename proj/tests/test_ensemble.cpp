#include <doctest.h>

#include <cmath>
#include <sstream>

#include "xcorpus/ensemble.hpp"
#include "xcorpus/error.hpp"
#include "xcorpus/rng.hpp"

using namespace xcorpus;
using namespace xcorpus::ensemble;

namespace {

constexpr auto P = BinaryClass::positive;
constexpr auto N = BinaryClass::negative;

// Coarse grid so ties between pairs and within pairs are frequent.
EnsembleInput random_input(Rng& rng) {
  EnsembleInput in(1 + rng.below(8));
  for (auto& p : in) {
    p.p_pos = static_cast<double>(rng.below(21)) / 20.0;
    p.p_neg = 1.0 - p.p_pos;
  }
  return in;
}

BinaryClass oracle_dv(const EnsembleInput& in) {
  int pos = 0, neg = 0;
  for (const auto& p : in) (p.p_pos > p.p_neg ? pos : neg)++;
  return pos > neg ? P : N;
}

BinaryClass oracle_sv(const EnsembleInput& in) {
  double pos = 0, neg = 0;
  for (const auto& p : in) {
    pos += p.p_pos;
    neg += p.p_neg;
  }
  return pos > neg ? P : N;
}

BinaryClass oracle_mw(const EnsembleInput& in) {
  double best = -1;
  BinaryClass verdict = N;
  for (const auto& p : in) {
    const double conf = std::max(p.p_pos, p.p_neg);
    if (conf > best) {
      best = conf;
      verdict = p.p_pos > p.p_neg ? P : N;
    }
  }
  return verdict;
}

BinaryClass oracle_threshold(const EnsembleInput& in, double tau, bool fallback_mw) {
  for (const auto& p : in)
    if (p.p_pos >= tau) return P;
  return fallback_mw ? oracle_mw(in) : N;
}

}  // namespace

TEST_CASE("combinators match brute-force recomputation") {
  Rng rng(2718);
  for (int trial = 0; trial < 10000; ++trial) {
    const auto in = random_input(rng);
    CHECK(democratic_vote(in) == oracle_dv(in));
    CHECK(sum_vote(in) == oracle_sv(in));
    CHECK(max_wins(in) == oracle_mw(in));
    CHECK(combine(Strategy::T05, in) == oracle_threshold(in, 0.5, false));
    CHECK(combine(Strategy::T095, in) == oracle_threshold(in, 0.95, true));
  }
}

TEST_CASE("tie cases resolve to negative") {
  const EnsembleInput half{{0.5, 0.5}};
  CHECK(argmax(half[0]) == N);
  CHECK(democratic_vote(EnsembleInput{{0.2, 0.8}, {0.8, 0.2}}) == N);
  CHECK(sum_vote(EnsembleInput{{0.3, 0.7}, {0.7, 0.3}}) == N);
  CHECK(max_wins(EnsembleInput{{0.1, 0.9}, {0.9, 0.1}}) == P);
  CHECK(max_wins(EnsembleInput{{0.9, 0.1}, {0.1, 0.9}}) == N);
  CHECK(combine(Strategy::T05, half) == P);
  CHECK(combine(Strategy::T095, EnsembleInput{{0.6, 0.4}, {0.3, 0.7}}) == P);
  CHECK(combine(Strategy::T095, EnsembleInput{{0.9, 0.1}, {0.3, 0.7}}) == N);
}

TEST_CASE("strategy names") {
  for (auto s : kAllStrategies) CHECK(parse_strategy(to_string(s)) == s);
  CHECK(to_string(Strategy::T095) == "T0.95");
  CHECK_FALSE(parse_strategy("T0.7").has_value());
}

TEST_CASE("combiner features and gradient") {
  const EnsembleInput in{{0.3, 0.7}, {0.9, 0.1}};
  const auto x = combiner_features(in);
  REQUIRE(x.entries.size() == 4);
  CHECK(x.entries[1] == std::pair<std::uint32_t, double>{1, 0.7});
  CHECK(x.entries[2] == std::pair<std::uint32_t, double>{2, 0.9});

  Rng rng(6);
  const std::size_t k = 5;
  classify::LinearModel m(2 * k);
  for (auto& w : m.weights) w = rng.normal();
  std::vector<classify::FeatureVector> xs;
  std::vector<BinaryClass> ys;
  for (int i = 0; i < 10; ++i) {
    EnsembleInput e(k);
    for (auto& p : e) {
      p.p_pos = rng.uniform();
      p.p_neg = 1 - p.p_pos;
    }
    xs.push_back(combiner_features(e));
    ys.push_back(rng.bernoulli(0.5) ? P : N);
  }
  const auto g = classify::batch_gradient(m, xs, ys, 1e-6);
  for (std::size_t cls = 0; cls < 2; ++cls)
    for (std::size_t idx = 0; idx < 2 * k; ++idx) {
      const double h = 1e-6;
      auto plus = m, minus = m;
      plus.w(cls, idx) += h;
      minus.w(cls, idx) -= h;
      const double numeric =
          (classify::batch_loss(plus, xs, ys, 1e-6) - classify::batch_loss(minus, xs, ys, 1e-6)) / (2 * h);
      CHECK(std::abs(numeric - g.w(cls, idx)) / (std::abs(numeric) + std::abs(g.w(cls, idx)) + 1e-12) < 1e-5);
    }
}

TEST_CASE("trained combiner learns to trust the informative classifier") {
  Rng rng(44);
  std::vector<std::string> ids;
  std::vector<EnsembleInput> inputs;
  std::vector<BinaryClass> truths;
  for (int i = 0; i < 600; ++i) {
    const bool pos = rng.bernoulli(0.4);
    const double good = pos ? 0.7 + 0.3 * rng.uniform() : 0.3 * rng.uniform();
    const double noise = rng.uniform();
    ids.push_back("v" + std::to_string(i));
    inputs.push_back({{1 - noise, noise}, {1 - good, good}});
    truths.push_back(pos ? P : N);
  }
  classify::TrainConfig cfg;
  cfg.seed = 3;
  const auto model = train_combiner({"noise", "good"}, ids, inputs, truths, cfg);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) correct += model.verdict(inputs[i]) == truths[i];
  CHECK(static_cast<double>(correct) / static_cast<double>(inputs.size()) > 0.95);

  std::stringstream s;
  save_combiner(s, model);
  const auto back = load_combiner(s);
  CHECK(back.classifiers == model.classifiers);
  CHECK(back.linear.weights == model.linear.weights);

  std::vector<BinaryClass> one(truths.size(), N);
  CHECK_THROWS_AS(train_combiner({"noise", "good"}, ids, inputs, one, cfg), Error);
}

TEST_CASE("merged datasets keep splits and namespace ids") {
  const auto make = [](std::string name) {
    corpus::LabeledDataset ds;
    ds.name = name;
    for (int i = 0; i < 5; ++i) {
      corpus::Message m;
      m.id = std::to_string(i);
      m.binary_class = i == 0 ? P : N;
      ds.messages.push_back(m);
    }
    ds.assignment = {corpus::SplitPart::train, corpus::SplitPart::train, corpus::SplitPart::train,
                     corpus::SplitPart::val, corpus::SplitPart::test};
    return ds;
  };
  const auto merged = merge_datasets({make("A"), make("B")}, "DM");
  CHECK(merged.size() == 10);
  CHECK(merged.messages[5].id == "B/0");
  CHECK(merged.assignment[9] == corpus::SplitPart::test);
  CHECK(merged.indices(corpus::SplitPart::test).size() == 2);
  CHECK_THROWS_AS(merge_datasets({make("A")}, "DM"), Error);
}

TEST_CASE("report csv rows follow the strategy subset") {
  EnsembleReport r;
  r.strategies = {Strategy::DV, Strategy::SV};
  r.datasets = {"A"};
  r.counts = {{4, 1, 5, 0}, {2, 0, 6, 2}};
  std::ostringstream out;
  write_report_csv(out, r, evaluate::Metric::precision);
  CHECK(out.str() == "strategy,A\nDV,0.80\nSV,1.00*\n");
}
