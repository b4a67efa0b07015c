#include "xcorpus/classify.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>

#include "xcorpus/error.hpp"
#include "xcorpus/evaluate.hpp"
#include "xcorpus/parallel.hpp"
#include "xcorpus/rng.hpp"
#include "xcorpus/text_io.hpp"

namespace xcorpus::classify {

using corpus::BinaryClass;

std::uint32_t hash_bucket(std::string_view token) {
  return static_cast<std::uint32_t>(fnv1a64(token) % kHashBuckets);
}

int char_slot(char c) {
  if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  const auto pos = kCharTable.find(c);
  return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
}

FeatureVector featurize(const corpus::TokenStream& tokens, std::string_view raw_text) {
  std::unordered_map<std::string_view, std::uint32_t> counts;
  for (const auto& t : tokens) ++counts[t];
  std::unordered_map<std::uint32_t, double> buckets;
  for (const auto& [token, n] : counts)
    buckets[hash_bucket(token)] += 1.0 + std::log(static_cast<double>(n));
  FeatureVector x;
  x.entries.assign(buckets.begin(), buckets.end());
  std::sort(x.entries.begin(), x.entries.end());
  std::array<bool, kCharSlots> present{};
  for (char c : raw_text) {
    const int slot = char_slot(c);
    if (slot >= 0) present[static_cast<std::size_t>(slot)] = true;
  }
  for (std::uint32_t s = 0; s < kCharSlots; ++s)
    if (present[s]) x.entries.emplace_back(kHashBuckets + s, 1.0);
  return x;
}

ProbPair softmax(double logit_neg, double logit_pos) {
  const double m = std::max(logit_neg, logit_pos);
  const double en = std::exp(logit_neg - m);
  const double ep = std::exp(logit_pos - m);
  const double z = en + ep;
  return {en / z, ep / z};
}

std::array<double, 2> LinearModel::logits(const FeatureVector& x) const {
  std::array<double, 2> out = bias;
  for (const auto& [idx, v] : x.entries) {
    out[0] += weights[idx] * v;
    out[1] += weights[dim + idx] * v;
  }
  return out;
}

bool LinearModel::all_finite() const {
  return std::isfinite(bias[0]) && std::isfinite(bias[1]) &&
         std::all_of(weights.begin(), weights.end(), [](double w) { return std::isfinite(w); });
}

ProbPair predict(const LinearModel& model, const FeatureVector& x) {
  const auto l = model.logits(x);
  return softmax(l[0], l[1]);
}

namespace {

void check_batch(const LinearModel& model, std::span<const FeatureVector> xs,
                 std::span<const BinaryClass> ys) {
  if (xs.size() != ys.size() || xs.empty()) throw Error("batch needs matching non-empty inputs");
  for (const auto& x : xs)
    for (const auto& [idx, v] : x.entries)
      if (idx >= model.dim) throw Error("feature index beyond model dimension");
}

}  // namespace

double batch_loss(const LinearModel& model, std::span<const FeatureVector> xs,
                  std::span<const BinaryClass> ys, double l2) {
  check_batch(model, xs, ys);
  double loss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto l = model.logits(xs[i]);
    const double m = std::max(l[0], l[1]);
    const double log_z = m + std::log(std::exp(l[0] - m) + std::exp(l[1] - m));
    loss += log_z - l[static_cast<std::size_t>(ys[i])];
  }
  loss /= static_cast<double>(xs.size());
  double sq = 0.0;
  for (double w : model.weights) sq += w * w;
  return loss + 0.5 * l2 * sq;
}

LinearModel batch_gradient(const LinearModel& model, std::span<const FeatureVector> xs,
                           std::span<const BinaryClass> ys, double l2) {
  check_batch(model, xs, ys);
  LinearModel g(model.dim);
  const double inv = 1.0 / static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const ProbPair p = predict(model, xs[i]);
    const double r0 = (p.p_neg - (ys[i] == BinaryClass::negative ? 1.0 : 0.0)) * inv;
    const double r1 = (p.p_pos - (ys[i] == BinaryClass::positive ? 1.0 : 0.0)) * inv;
    for (const auto& [idx, v] : xs[i].entries) {
      g.weights[idx] += r0 * v;
      g.weights[model.dim + idx] += r1 * v;
    }
    g.bias[0] += r0;
    g.bias[1] += r1;
  }
  for (std::size_t k = 0; k < g.weights.size(); ++k) g.weights[k] += l2 * model.weights[k];
  return g;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be > 0");
  if (!(lr_decay_per_epoch > 0.0 && lr_decay_per_epoch <= 1.0))
    throw Error("lr_decay_per_epoch must be in (0, 1]");
  if (epochs < 1) throw Error("epochs must be >= 1");
  if (batch_size < 1) throw Error("batch_size must be >= 1");
  if (!(l2 >= 0.0)) throw Error("l2 must be >= 0");
  if (!(input_dropout >= 0.0 && input_dropout < 1.0)) throw Error("dropout must be in [0, 1)");
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, TrainConfig d) {
  if (!j.is_object()) throw Error("train config must be a JSON object");
  d.learning_rate = j.value("learning_rate", d.learning_rate);
  d.lr_decay_per_epoch = j.value("lr_decay_per_epoch", d.lr_decay_per_epoch);
  d.epochs = j.value("epochs", d.epochs);
  d.batch_size = j.value("batch_size", d.batch_size);
  d.l2 = j.value("l2", d.l2);
  d.input_dropout = j.value("input_dropout", d.input_dropout);
  d.validate();
  return d;
}

TrainingData featurize_part(const corpus::LabeledDataset& ds, corpus::SplitPart part, int threads) {
  const auto idx = ds.indices(part);
  TrainingData data;
  data.ids.resize(idx.size());
  data.features.resize(idx.size());
  data.labels.resize(idx.size());
  parallel_for(idx.size(), threads, [&](std::size_t k) {
    const auto& m = ds.messages[idx[k]];
    data.ids[k] = m.id;
    data.features[k] = featurize(m.tokens, m.text);
    data.labels[k] = m.binary_class;
  });
  return data;
}

namespace {

// W = scale * v keeps the L2 shrink O(1) per step.
class ScaledParams {
 public:
  explicit ScaledParams(std::size_t dim) : dim_(dim), v_(2 * dim, 0.0) {}

  std::array<double, 2> logits(const FeatureVector& x) const {
    std::array<double, 2> s{0.0, 0.0};
    for (const auto& [idx, val] : x.entries) {
      s[0] += v_[idx] * val;
      s[1] += v_[dim_ + idx] * val;
    }
    return {bias_[0] + scale_ * s[0], bias_[1] + scale_ * s[1]};
  }

  void shrink(double factor) {
    scale_ *= factor;
    if (scale_ < 1e-6) {
      for (double& w : v_) w *= scale_;
      scale_ = 1.0;
    }
  }

  // W[cls, idx] -= step
  void add(std::size_t cls, std::uint32_t idx, double step) { v_[cls * dim_ + idx] -= step / scale_; }
  void add_bias(std::size_t cls, double step) { bias_[cls] -= step; }

  LinearModel snapshot() const {
    LinearModel m(dim_);
    for (std::size_t k = 0; k < v_.size(); ++k) m.weights[k] = scale_ * v_[k];
    m.bias = bias_;
    return m;
  }

 private:
  std::size_t dim_;
  std::vector<double> v_;
  std::array<double, 2> bias_{0.0, 0.0};
  double scale_ = 1.0;
};

FeatureVector drop_inputs(const FeatureVector& x, double rate, Rng rng) {
  FeatureVector out;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (const auto& [idx, v] : x.entries)
    if (!rng.bernoulli(rate)) out.entries.emplace_back(idx, v * keep_scale);
  return out;
}

double validation_f1(const LinearModel& model, const TrainingData& val, int threads) {
  std::vector<double> p(val.size());
  parallel_for(val.size(), threads, [&](std::size_t i) { p[i] = predict(model, val.features[i]).p_pos; });
  const auto m = evaluate::precision_recall_f1(evaluate::confusion(p, val.labels));
  return m.f1.value_or(std::numeric_limits<double>::quiet_NaN());
}

}  // namespace

LinearModel fit(std::size_t dim, const TrainingData& train, const TrainingData* val,
                const TrainConfig& cfg, TrainReport* report) {
  cfg.validate();
  if (train.size() == 0) throw Error("empty training data");
  for (const auto& x : train.features)
    for (const auto& [idx, v] : x.entries)
      if (idx >= dim) throw Error("feature index beyond model dimension");

  std::vector<std::size_t> by_id(train.size());
  std::iota(by_id.begin(), by_id.end(), std::size_t{0});
  std::sort(by_id.begin(), by_id.end(),
            [&](std::size_t a, std::size_t b) { return train.ids[a] < train.ids[b]; });

  ScaledParams params(dim);
  LinearModel best;
  double best_f1 = -1.0;
  TrainReport local;
  double lr = cfg.learning_rate;
  const bool use_dropout = cfg.input_dropout > 0.0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order = by_id;
    Rng epoch_rng(derive_seed(cfg.seed, "epoch-" + std::to_string(epoch)));
    shuffle(std::span(order), epoch_rng);

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, order.size() - start);
      std::vector<FeatureVector> dropped(use_dropout ? b : 0);
      std::vector<std::array<double, 2>> residual(b);
      parallel_for(b, cfg.threads, [&](std::size_t k) {
        const std::size_t i = order[start + k];
        const FeatureVector* x = &train.features[i];
        if (use_dropout) {
          dropped[k] = drop_inputs(*x, cfg.input_dropout,
                                   epoch_rng.split("drop-" + std::to_string(start + k)));
          x = &dropped[k];
        }
        const auto l = params.logits(*x);
        const ProbPair p = softmax(l[0], l[1]);
        const double y1 = train.labels[i] == BinaryClass::positive ? 1.0 : 0.0;
        residual[k] = {p.p_neg - (1.0 - y1), p.p_pos - y1};
      });
      const double step = lr;
      params.shrink(1.0 - lr * static_cast<double>(b) * cfg.l2);
      for (std::size_t k = 0; k < b; ++k) {
        const FeatureVector& x = use_dropout ? dropped[k] : train.features[order[start + k]];
        for (const auto& [idx, v] : x.entries) {
          params.add(0, idx, step * residual[k][0] * v);
          params.add(1, idx, step * residual[k][1] * v);
        }
        params.add_bias(0, step * residual[k][0]);
        params.add_bias(1, step * residual[k][1]);
      }
    }
    lr *= cfg.lr_decay_per_epoch;

    LinearModel snap = params.snapshot();
    if (!snap.all_finite()) throw Error("training diverged at epoch " + std::to_string(epoch));
    const double f1 = (val && val->size() > 0) ? validation_f1(snap, *val, cfg.threads)
                                               : std::numeric_limits<double>::quiet_NaN();
    local.val_f1.push_back(f1);
    if (!std::isnan(f1) && f1 > best_f1) {
      best_f1 = f1;
      best = std::move(snap);
      local.selected_epoch = epoch;
    } else if (epoch == cfg.epochs - 1 && local.selected_epoch < 0) {
      best = std::move(snap);
      local.selected_epoch = epoch;
    }
  }
  if (report) *report = std::move(local);
  return best;
}

LinearModel train(const corpus::LabeledDataset& ds, const TrainConfig& cfg, TrainReport* report) {
  if (!ds.is_split()) throw Error("dataset " + ds.name + " has not been split");
  const TrainingData tr = featurize_part(ds, corpus::SplitPart::train, cfg.threads);
  if (tr.size() == 0) throw Error("dataset " + ds.name + " has an empty training split");
  const auto positives = std::count(tr.labels.begin(), tr.labels.end(), BinaryClass::positive);
  if (positives == 0 || static_cast<std::size_t>(positives) == tr.size())
    throw Error("dataset " + ds.name + ": training split contains a single class");
  const TrainingData va = featurize_part(ds, corpus::SplitPart::val, cfg.threads);
  return fit(kFeatureDim, tr, &va, cfg, report);
}

nlohmann::json feature_space_descriptor() {
  return {{"hash", "fnv1a64"},
          {"buckets", kHashBuckets},
          {"term_value", "1+ln(count)"},
          {"char_table", std::string(kCharTable)}};
}

nlohmann::json model_to_json(const LinearModel& model, std::string_view format,
                             const nlohmann::json& feature_space) {
  nlohmann::json weights = nlohmann::json::array();
  for (std::size_t idx = 0; idx < model.dim; ++idx) {
    const double w0 = model.w(0, idx), w1 = model.w(1, idx);
    if (w0 != 0.0 || w1 != 0.0) weights.push_back({idx, w0, w1});
  }
  return {{"format", format},
          {"version", 1},
          {"dim", model.dim},
          {"classes", {"negative", "positive"}},
          {"feature_space", feature_space},
          {"bias", {model.bias[0], model.bias[1]}},
          {"weights", std::move(weights)}};
}

LinearModel model_from_json(const nlohmann::json& j, std::string_view format,
                            nlohmann::json* feature_space) {
  try {
    if (j.at("format").get<std::string>() != format)
      throw Error("expected model format " + std::string(format));
    if (j.at("version").get<int>() != 1) throw Error("unsupported model version");
    LinearModel m(j.at("dim").get<std::size_t>());
    m.bias = {j.at("bias").at(0).get<double>(), j.at("bias").at(1).get<double>()};
    for (const auto& row : j.at("weights")) {
      const auto idx = row.at(0).get<std::size_t>();
      if (idx >= m.dim) throw Error("weight index beyond model dimension");
      m.w(0, idx) = row.at(1).get<double>();
      m.w(1, idx) = row.at(2).get<double>();
    }
    if (feature_space) *feature_space = j.at("feature_space");
    if (!m.all_finite()) throw Error("model has non-finite parameters");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed model file: ") + e.what());
  }
}

void save_model(std::ostream& out, const LinearModel& model) {
  out << model_to_json(model, "xcorpus-linear", feature_space_descriptor()).dump() << '\n';
}

LinearModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
  nlohmann::json space;
  LinearModel m = model_from_json(j, "xcorpus-linear", &space);
  if (space != feature_space_descriptor() || m.dim != kFeatureDim)
    throw Error(path.string() + ": feature space does not match this build");
  return m;
}

const ProbPair& ScoreColumn::at(const std::string& id) const {
  const auto it = scores.find(id);
  if (it == scores.end())
    throw Error("classifier " + classifier + " has no score for message " + id + " of " + dataset);
  return it->second;
}

ScoreColumn score_dataset(const LinearModel& model, std::string classifier,
                          const corpus::LabeledDataset& ds, int threads) {
  std::vector<ProbPair> probs(ds.size());
  parallel_for(ds.size(), threads, [&](std::size_t i) {
    const auto& m = ds.messages[i];
    probs[i] = predict(model, featurize(m.tokens, m.text));
  });
  ScoreColumn col;
  col.classifier = std::move(classifier);
  col.dataset = ds.name;
  for (std::size_t i = 0; i < ds.size(); ++i) col.scores.emplace(ds.messages[i].id, probs[i]);
  return col;
}

namespace {

std::string list_ids(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  std::string out;
  const std::size_t shown = std::min<std::size_t>(ids.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) out += (i ? ", " : "") + ids[i];
  if (ids.size() > shown) out += ", ... (" + std::to_string(ids.size() - shown) + " more)";
  return out;
}

bool next_content_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) return true;
  }
  return false;
}

std::pair<std::string, std::string> read_header(std::istream& in, std::size_t& line_no) {
  std::string line;
  if (!next_content_line(in, line, line_no)) throw Error("score file is empty");
  auto fields = split_csv_line(line);
  if (fields.size() == 2 && fields[0] == "classifier" && fields[1] == "dataset") {
    if (!next_content_line(in, line, line_no)) throw Error("score file has no classifier,dataset line");
    fields = split_csv_line(line);
  }
  if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
    throw Error("line " + std::to_string(line_no) + ": expected \"<classifier>,<dataset>\"");
  return {fields[0], fields[1]};
}

}  // namespace

ScoreColumn load_external_scores(std::istream& in, const corpus::LabeledDataset& ds) {
  std::size_t line_no = 0;
  ScoreColumn col;
  std::tie(col.classifier, col.dataset) = read_header(in, line_no);
  if (col.dataset != ds.name)
    throw Error("score file is for dataset " + col.dataset + ", expected " + ds.name);
  std::unordered_map<std::string_view, std::size_t> known;
  for (std::size_t i = 0; i < ds.size(); ++i) known.emplace(ds.messages[i].id, i);

  std::vector<std::string> unknown;
  std::string line;
  bool first = true;
  while (next_content_line(in, line, line_no)) {
    const auto fields = split_csv_line(line);
    if (first && fields.size() == 2 && fields[0] == "message_id") {
      first = false;
      continue;
    }
    first = false;
    const auto where = "line " + std::to_string(line_no) + ": ";
    if (fields.size() != 2) throw Error(where + "expected \"<message_id>,<p_pos>\"");
    double p = 0.0;
    const auto& text = fields[1];
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), p);
    if (ec != std::errc() || ptr != text.data() + text.size())
      throw Error(where + "p_pos \"" + text + "\" is not a number");
    if (!(p >= 0.0 && p <= 1.0)) throw Error(where + "p_pos " + text + " outside [0, 1]");
    if (!known.contains(fields[0])) {
      unknown.push_back(fields[0]);
      continue;
    }
    if (!col.scores.emplace(fields[0], ProbPair{1.0 - p, p}).second)
      throw Error(where + "duplicate message id " + fields[0]);
  }
  if (!unknown.empty())
    throw Error("score file has ids not in dataset " + ds.name + ": " + list_ids(unknown));
  std::vector<std::string> missing;
  for (std::size_t idx : ds.indices(corpus::SplitPart::test))
    if (!col.scores.contains(ds.messages[idx].id)) missing.push_back(ds.messages[idx].id);
  if (!missing.empty())
    throw Error("score file for " + col.classifier + " misses " + std::to_string(missing.size()) +
                " test id(s) of " + ds.name + ": " + list_ids(missing));
  return col;
}

ScoreColumn load_external_scores(const std::filesystem::path& path, const corpus::LabeledDataset& ds) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open score file " + path.string());
  try {
    return load_external_scores(in, ds);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::pair<std::string, std::string> peek_score_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open score file " + path.string());
  std::size_t line_no = 0;
  try {
    return read_header(in, line_no);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace xcorpus::classify
