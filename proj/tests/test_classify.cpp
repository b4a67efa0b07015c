#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "xcorpus/classify.hpp"
#include "xcorpus/error.hpp"
#include "xcorpus/rng.hpp"

using namespace xcorpus;
using namespace xcorpus::classify;
using corpus::BinaryClass;

namespace {

std::string jsonl(const std::vector<std::tuple<std::string, std::string, bool>>& rows) {
  std::ostringstream s;
  for (const auto& [id, text, pos] : rows)
    s << nlohmann::json{{"id", id}, {"text", text}, {"labels", pos ? std::vector<std::string>{"bad"}
                                                                   : std::vector<std::string>{}}}
             .dump()
      << '\n';
  return s.str();
}

corpus::MergeRule bad_rule() {
  corpus::MergeRule r;
  r.positive_labels = {"bad"};
  return r;
}

// Two-word-signal corpus: positives say "awful", negatives say "lovely".
std::vector<std::tuple<std::string, std::string, bool>> toy_rows(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<std::string> filler{"the", "a", "day", "was", "it", "so", "very", "and"};
  std::vector<std::tuple<std::string, std::string, bool>> rows;
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = rng.bernoulli(0.4);
    std::string text;
    for (int k = 0; k < 5; ++k) text += filler[rng.below(filler.size())] + " ";
    text += pos ? "awful" : "lovely";
    rows.emplace_back("m" + std::to_string(i), text, pos);
  }
  return rows;
}

corpus::LabeledDataset toy_dataset(const std::vector<std::tuple<std::string, std::string, bool>>& rows,
                                   std::uint64_t split_seed = 3) {
  std::istringstream in(jsonl(rows));
  return corpus::split(corpus::ingest(in, bad_rule(), "toy"), split_seed);
}

FeatureVector random_features(Rng& rng, std::size_t dim) {
  FeatureVector x;
  for (std::uint32_t i = 0; i < dim; ++i)
    if (rng.bernoulli(0.3)) x.entries.emplace_back(i, rng.normal());
  return x;
}

}  // namespace

TEST_CASE("featurize") {
  CHECK(featurize({}, "").entries.empty());

  const corpus::TokenStream ten(10, "spam");
  const auto x = featurize(ten, "");
  REQUIRE(x.entries.size() == 1);
  CHECK(x.entries[0].first == hash_bucket("spam"));
  CHECK(x.entries[0].second == doctest::Approx(1.0 + std::log(10.0)));
  CHECK(x.entries[0].second == doctest::Approx(3.3026).epsilon(1e-4));

  const auto y = featurize({"a"}, "a");
  const auto slot = kHashBuckets + static_cast<std::uint32_t>(char_slot('a'));
  CHECK(std::find(y.entries.begin(), y.entries.end(), std::pair<std::uint32_t, double>{slot, 1.0}) !=
        y.entries.end());
  CHECK(char_slot('A') == char_slot('a'));
  CHECK(char_slot('\x01') == -1);
  CHECK(std::is_sorted(y.entries.begin(), y.entries.end()));
}

TEST_CASE("character block is binary presence") {
  const auto x = featurize({}, "aaa!!! zz");
  for (const auto& [idx, v] : x.entries) {
    CHECK(idx >= kHashBuckets);
    CHECK(v == 1.0);
  }
  CHECK(x.entries.size() == 4);  // a ! space z
}

TEST_CASE("softmax") {
  const auto p = softmax(0.0, std::log(3.0));
  CHECK(p.p_neg == doctest::Approx(0.25));
  CHECK(p.p_pos == doctest::Approx(0.75));
  const auto big = softmax(1000.0, -1000.0);
  CHECK(big.p_neg == 1.0);
  CHECK(big.p_pos == 0.0);
}

TEST_CASE("initial loss is ln 2") {
  Rng rng(4);
  LinearModel m(30);
  std::vector<FeatureVector> xs;
  std::vector<BinaryClass> ys;
  for (int i = 0; i < 16; ++i) {
    xs.push_back(random_features(rng, 30));
    ys.push_back(rng.bernoulli(0.5) ? BinaryClass::positive : BinaryClass::negative);
  }
  CHECK(std::abs(batch_loss(m, xs, ys, 1e-6) - std::log(2.0)) < 1e-6);
}

TEST_CASE("batch gradient matches central differences") {
  Rng rng(99);
  const std::size_t dim = 40;
  LinearModel m(dim);
  for (auto& w : m.weights) w = 0.5 * rng.normal();
  m.bias = {0.3, -0.2};
  std::vector<FeatureVector> xs;
  std::vector<BinaryClass> ys;
  for (int i = 0; i < 10; ++i) {
    xs.push_back(random_features(rng, dim));
    ys.push_back(rng.bernoulli(0.5) ? BinaryClass::positive : BinaryClass::negative);
  }
  const double l2 = 1e-3;
  const auto g = batch_gradient(m, xs, ys, l2);
  for (int t = 0; t < 20; ++t) {
    const std::size_t cls = rng.below(2), idx = rng.below(dim);
    const double h = 1e-6;
    LinearModel plus = m, minus = m;
    plus.w(cls, idx) += h;
    minus.w(cls, idx) -= h;
    const double numeric = (batch_loss(plus, xs, ys, l2) - batch_loss(minus, xs, ys, l2)) / (2 * h);
    const double analytic = g.w(cls, idx);
    CHECK(std::abs(numeric - analytic) / std::max(1e-7, std::abs(numeric) + std::abs(analytic)) < 1e-5);
  }
  for (std::size_t cls = 0; cls < 2; ++cls) {
    const double h = 1e-6;
    LinearModel plus = m, minus = m;
    plus.bias[cls] += h;
    minus.bias[cls] -= h;
    const double numeric = (batch_loss(plus, xs, ys, l2) - batch_loss(minus, xs, ys, l2)) / (2 * h);
    CHECK(std::abs(numeric - g.bias[cls]) / (std::abs(numeric) + std::abs(g.bias[cls])) < 1e-5);
  }
}

TEST_CASE("separable points reach perfect training accuracy") {
  // 200 points in 10 dimensions separated by a margin of 1 around a random hyperplane.
  Rng rng(17);
  const std::size_t dim = 10;
  std::vector<double> normal(dim);
  double len = 0;
  for (auto& v : normal) {
    v = rng.normal();
    len += v * v;
  }
  for (auto& v : normal) v /= std::sqrt(len);
  TrainingData data;
  while (data.size() < 200) {
    FeatureVector x;
    double s = 0;
    for (std::uint32_t i = 0; i < dim; ++i) {
      const double v = rng.normal();
      x.entries.emplace_back(i, v);
      s += v * normal[i];
    }
    if (std::abs(s) < 1.0) continue;
    data.ids.push_back("p" + std::to_string(data.size()));
    data.features.push_back(std::move(x));
    data.labels.push_back(s > 0 ? BinaryClass::positive : BinaryClass::negative);
  }
  TrainConfig cfg;
  cfg.seed = 5;
  const auto model = fit(dim, data, nullptr, cfg);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto p = predict(model, data.features[i]);
    correct += (p.p_pos >= 0.5) == (data.labels[i] == BinaryClass::positive);
  }
  CHECK(correct == data.size());
}

TEST_CASE("training is independent of thread count and record order") {
  auto rows = toy_rows(400, 8);
  TrainConfig cfg;
  cfg.seed = 12;
  const auto ds = toy_dataset(rows);
  TrainReport r1;
  const auto a = train(ds, cfg, &r1);
  cfg.threads = 4;
  const auto b = train(ds, cfg);
  CHECK(a.weights == b.weights);
  CHECK(a.bias == b.bias);

  // Same split assignment, reversed file order.
  auto reversed = ds;
  std::reverse(reversed.messages.begin(), reversed.messages.end());
  std::reverse(reversed.assignment.begin(), reversed.assignment.end());
  const auto c = train(reversed, cfg);
  CHECK(a.weights == c.weights);
  CHECK(a.bias == c.bias);

  CHECK(r1.val_f1.size() == static_cast<std::size_t>(cfg.epochs));
  CHECK(r1.selected_epoch >= 0);
  const auto scores = score_dataset(a, "toy", ds);
  std::size_t correct = 0;
  for (const auto& m : ds.messages)
    correct += (scores.at(m.id).p_pos >= 0.5) == (m.binary_class == BinaryClass::positive);
  CHECK(correct == ds.size());
}

TEST_CASE("train rejects unusable splits") {
  std::vector<std::tuple<std::string, std::string, bool>> rows;
  for (int i = 0; i < 20; ++i) rows.emplace_back("n" + std::to_string(i), "calm words", false);
  CHECK_THROWS_AS(train(toy_dataset(rows), TrainConfig{}), Error);
  std::istringstream in(jsonl(toy_rows(10, 1)));
  CHECK_THROWS_AS(train(corpus::ingest(in, bad_rule(), "unsplit"), TrainConfig{}), Error);
  TrainConfig bad;
  bad.lr_decay_per_epoch = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("model json round trip") {
  const auto ds = toy_dataset(toy_rows(120, 2));
  TrainConfig cfg;
  cfg.seed = 1;
  const auto m = train(ds, cfg);
  std::ostringstream out;
  save_model(out, m);
  const auto back = model_from_json(nlohmann::json::parse(out.str()), "xcorpus-linear");
  CHECK(back.weights == m.weights);
  CHECK(back.bias == m.bias);
  CHECK_THROWS_AS(model_from_json(nlohmann::json::parse(out.str()), "other"), Error);
}

TEST_CASE("external scores") {
  const auto ds = toy_dataset(toy_rows(20, 6));
  std::string body;
  for (const auto& m : ds.messages) body += m.id + ",0.25\n";

  SUBCASE("accepted forms") {
    std::istringstream a("clf,toy\n" + body);
    const auto col = load_external_scores(a, ds);
    CHECK(col.classifier == "clf");
    CHECK(col.at(ds.messages[0].id).p_pos == 0.25);
    CHECK(col.at(ds.messages[0].id).p_neg == 0.75);
    std::istringstream b("classifier,dataset\nclf,toy\nmessage_id,p_pos\n" + body);
    CHECK(load_external_scores(b, ds).scores.size() == ds.size());
  }
  SUBCASE("wrong dataset") {
    std::istringstream in("clf,other\n" + body);
    CHECK_THROWS_AS(load_external_scores(in, ds), Error);
  }
  SUBCASE("out of range") {
    std::istringstream in("clf,toy\n" + ds.messages[0].id + ",1.5\n");
    CHECK_THROWS_AS(load_external_scores(in, ds), Error);
  }
  SUBCASE("unknown id") {
    std::istringstream in("clf,toy\n" + body + "ghost,0.1\n");
    try {
      load_external_scores(in, ds);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("ghost") != std::string::npos);
    }
  }
  SUBCASE("duplicate id") {
    std::istringstream in("clf,toy\n" + body + ds.messages[0].id + ",0.5\n");
    CHECK_THROWS_AS(load_external_scores(in, ds), Error);
  }
  SUBCASE("missing test id") {
    const auto test = ds.indices(corpus::SplitPart::test);
    REQUIRE_FALSE(test.empty());
    std::string partial;
    for (std::size_t i = 0; i < ds.size(); ++i)
      if (i != test[0]) partial += ds.messages[i].id + ",0.5\n";
    std::istringstream in("clf,toy\n" + partial);
    try {
      load_external_scores(in, ds);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find(ds.messages[test[0]].id) != std::string::npos);
    }
  }
}
