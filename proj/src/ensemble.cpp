#include "xcorpus/ensemble.hpp"

#include <algorithm>
#include <ostream>
#include <unordered_set>

#include "xcorpus/error.hpp"
#include "xcorpus/text_io.hpp"

namespace xcorpus::ensemble {

BinaryClass argmax(const ProbPair& p) {
  return p.p_pos > p.p_neg ? BinaryClass::positive : BinaryClass::negative;
}

BinaryClass democratic_vote(std::span<const ProbPair> input) {
  std::size_t positive = 0;
  for (const auto& p : input)
    if (argmax(p) == BinaryClass::positive) ++positive;
  return 2 * positive > input.size() ? BinaryClass::positive : BinaryClass::negative;
}

BinaryClass sum_vote(std::span<const ProbPair> input) {
  double pos = 0.0, neg = 0.0;
  for (const auto& p : input) {
    pos += p.p_pos;
    neg += p.p_neg;
  }
  return pos > neg ? BinaryClass::positive : BinaryClass::negative;
}

BinaryClass max_wins(std::span<const ProbPair> input) {
  if (input.empty()) return BinaryClass::negative;
  std::size_t best = 0;
  double best_conf = std::max(input[0].p_neg, input[0].p_pos);
  for (std::size_t k = 1; k < input.size(); ++k) {
    const double conf = std::max(input[k].p_neg, input[k].p_pos);
    if (conf > best_conf) {
      best_conf = conf;
      best = k;
    }
  }
  return argmax(input[best]);
}

BinaryClass threshold_vote(std::span<const ProbPair> input, const ThresholdPolicy& policy) {
  for (const auto& p : input)
    if (p.p_pos >= policy.tau) return BinaryClass::positive;
  return policy.fallback == ThresholdPolicy::Fallback::max_wins ? max_wins(input)
                                                                : BinaryClass::negative;
}

classify::FeatureVector combiner_features(std::span<const ProbPair> input) {
  classify::FeatureVector x;
  x.entries.reserve(2 * input.size());
  for (std::size_t k = 0; k < input.size(); ++k) {
    x.entries.emplace_back(static_cast<std::uint32_t>(2 * k), input[k].p_neg);
    x.entries.emplace_back(static_cast<std::uint32_t>(2 * k + 1), input[k].p_pos);
  }
  return x;
}

ProbPair CombinerModel::predict(std::span<const ProbPair> input) const {
  if (2 * input.size() != linear.dim)
    throw Error("combiner expects " + std::to_string(linear.dim / 2) + " classifiers, got " +
                std::to_string(input.size()));
  return classify::predict(linear, combiner_features(input));
}

CombinerModel train_combiner(const std::vector<std::string>& classifiers,
                             const std::vector<std::string>& ids,
                             const std::vector<EnsembleInput>& inputs,
                             const std::vector<BinaryClass>& truths, classify::TrainConfig cfg,
                             double dropout_rate) {
  if (inputs.size() != truths.size() || inputs.size() != ids.size())
    throw Error("combiner inputs, ids and truths differ in length");
  const auto positives = std::count(truths.begin(), truths.end(), BinaryClass::positive);
  if (positives == 0 || static_cast<std::size_t>(positives) == truths.size())
    throw Error("combiner training data contains a single class");
  classify::TrainingData data;
  data.ids = ids;
  data.labels = truths;
  data.features.reserve(inputs.size());
  for (const auto& in : inputs) {
    if (in.size() != classifiers.size()) throw Error("combiner input has the wrong number of pairs");
    data.features.push_back(combiner_features(in));
  }
  cfg.input_dropout = dropout_rate;
  CombinerModel model;
  model.classifiers = classifiers;
  model.dropout_rate = dropout_rate;
  model.linear = classify::fit(2 * classifiers.size(), data, nullptr, cfg);
  return model;
}

void save_combiner(std::ostream& out, const CombinerModel& model) {
  const nlohmann::json space = {{"kind", "probability-pairs"},
                                {"classifiers", model.classifiers},
                                {"dropout_rate", model.dropout_rate}};
  out << classify::model_to_json(model.linear, "xcorpus-combiner", space).dump() << '\n';
}

CombinerModel load_combiner(std::istream& in) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed combiner file: ") + e.what());
  }
  nlohmann::json space;
  CombinerModel m;
  m.linear = classify::model_from_json(j, "xcorpus-combiner", &space);
  try {
    m.classifiers = space.at("classifiers").get<std::vector<std::string>>();
    m.dropout_rate = space.at("dropout_rate").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed combiner feature space: ") + e.what());
  }
  if (2 * m.classifiers.size() != m.linear.dim) throw Error("combiner dimension mismatch");
  return m;
}

corpus::LabeledDataset merge_datasets(const std::vector<corpus::LabeledDataset>& datasets,
                                      std::string name) {
  if (datasets.size() < 2) throw Error("merging needs at least two datasets");
  corpus::LabeledDataset merged;
  merged.name = std::move(name);
  std::unordered_set<std::string> seen;
  for (const auto& ds : datasets) {
    if (!ds.is_split()) throw Error("dataset " + ds.name + " must be split before merging");
    for (std::size_t i = 0; i < ds.size(); ++i) {
      corpus::Message m = ds.messages[i];
      m.id = ds.name + "/" + m.id;
      if (!seen.insert(m.id).second) throw Error("merged id collision: " + m.id);
      m.predefined_split = ds.assignment[i];
      merged.messages.push_back(std::move(m));
      merged.assignment.push_back(ds.assignment[i]);
    }
  }
  return merged;
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::LL: return "LL";
    case Strategy::DV: return "DV";
    case Strategy::SV: return "SV";
    case Strategy::MW: return "MW";
    case Strategy::T05: return "T0.5";
    case Strategy::T095: return "T0.95";
    case Strategy::DM: return "DM";
  }
  return "?";
}

std::optional<Strategy> parse_strategy(std::string_view text) {
  for (Strategy s : kAllStrategies)
    if (to_string(s) == text) return s;
  return std::nullopt;
}

BinaryClass combine(Strategy s, std::span<const ProbPair> input) {
  switch (s) {
    case Strategy::DV: return democratic_vote(input);
    case Strategy::SV: return sum_vote(input);
    case Strategy::MW: return max_wins(input);
    case Strategy::T05: return threshold_vote(input, {0.5, ThresholdPolicy::Fallback::negative});
    case Strategy::T095: return threshold_vote(input, {0.95, ThresholdPolicy::Fallback::max_wins});
    case Strategy::LL:
    case Strategy::DM: break;
  }
  throw Error("strategy " + std::string(to_string(s)) + " needs a trained model");
}

void write_report_csv(std::ostream& out, const EnsembleReport& report, evaluate::Metric metric) {
  evaluate::EvalGrid grid;
  for (Strategy s : report.strategies) grid.classifiers.emplace_back(to_string(s));
  grid.datasets = report.datasets;
  for (std::size_t r = 0; r < report.strategies.size(); ++r)
    for (std::size_t c = 0; c < report.datasets.size(); ++c) {
      evaluate::EvalCell cell;
      cell.trained_on = grid.classifiers[r];
      cell.tested_on = report.datasets[c];
      cell.counts = report.at(r, c);
      cell.metrics = evaluate::precision_recall_f1(cell.counts);
      grid.cells.push_back(std::move(cell));
    }
  evaluate::mark_column_best(grid);
  evaluate::write_grid_csv(out, grid, metric, "strategy");
}

nlohmann::json to_json(const EnsembleReport& report) {
  const auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < report.strategies.size(); ++r)
    for (std::size_t c = 0; c < report.datasets.size(); ++c) {
      const auto& k = report.at(r, c);
      const auto m = evaluate::precision_recall_f1(k);
      rows.push_back({{"strategy", to_string(report.strategies[r])},
                      {"tested_on", report.datasets[c]},
                      {"tp", k.tp},
                      {"fp", k.fp},
                      {"tn", k.tn},
                      {"fn", k.fn},
                      {"precision", opt(m.precision)},
                      {"recall", opt(m.recall)},
                      {"f1", opt(m.f1)}});
    }
  return {{"datasets", report.datasets}, {"cells", std::move(rows)}};
}

}  // namespace xcorpus::ensemble
