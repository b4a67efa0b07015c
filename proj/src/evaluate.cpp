#include "xcorpus/evaluate.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>

#include "xcorpus/error.hpp"
#include "xcorpus/parallel.hpp"
#include "xcorpus/text_io.hpp"

namespace xcorpus::evaluate {

Confusion confusion(std::span<const double> p_pos, std::span<const BinaryClass> truths,
                    double threshold) {
  if (p_pos.size() != truths.size()) throw Error("scores and truths differ in length");
  Confusion c;
  for (std::size_t i = 0; i < p_pos.size(); ++i) {
    const bool predicted = p_pos[i] >= threshold;
    const bool actual = truths[i] == BinaryClass::positive;
    if (predicted && actual) ++c.tp;
    else if (predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

Confusion confusion(const std::unordered_map<std::string, classify::ProbPair>& scores,
                    const std::unordered_map<std::string, BinaryClass>& truths, double threshold) {
  std::vector<std::string> unmatched;
  for (const auto& [id, p] : scores)
    if (!truths.contains(id)) unmatched.push_back(id);
  for (const auto& [id, t] : truths)
    if (!scores.contains(id)) unmatched.push_back(id);
  if (!unmatched.empty()) {
    std::sort(unmatched.begin(), unmatched.end());
    std::string list;
    for (std::size_t i = 0; i < unmatched.size() && i < 20; ++i) list += (i ? ", " : "") + unmatched[i];
    throw Error("score and truth id sets differ (" + std::to_string(unmatched.size()) +
                " ids): " + list);
  }
  std::vector<double> p;
  std::vector<BinaryClass> t;
  for (const auto& [id, truth] : truths) {
    p.push_back(scores.at(id).p_pos);
    t.push_back(truth);
  }
  return confusion(p, t, threshold);
}

Metrics precision_recall_f1(const Confusion& c) {
  Metrics m;
  if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (m.precision && m.recall) {
    const double s = *m.precision + *m.recall;
    m.f1 = s > 0.0 ? 2.0 * *m.precision * *m.recall / s : 0.0;
  }
  return m;
}

double auc(std::span<const double> p_pos, std::span<const BinaryClass> truths) {
  if (p_pos.size() != truths.size()) throw Error("scores and truths differ in length");
  const std::size_t n = p_pos.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_pos[a] < p_pos[b]; });
  // Doubled mid-ranks (1-based) stay integral: tie block [i, j) gets i + j + 1.
  std::uint64_t rank_sum_x2 = 0, n_pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && p_pos[order[j]] == p_pos[order[i]]) ++j;
    const std::uint64_t doubled_rank = i + j + 1;
    for (std::size_t k = i; k < j; ++k) {
      if (truths[order[k]] == BinaryClass::positive) {
        rank_sum_x2 += doubled_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::uint64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error("AUC needs both positive and negative messages");
  const std::uint64_t u_x2 = rank_sum_x2 - n_pos * (n_pos + 1);
  return static_cast<double>(u_x2) / static_cast<double>(2 * n_pos * n_neg);
}

LabeledScores gather(const classify::ScoreColumn& column, const corpus::LabeledDataset& ds,
                     corpus::SplitPart part) {
  LabeledScores out;
  std::size_t missing = 0;
  std::string first_missing;
  for (std::size_t idx : ds.indices(part)) {
    const auto& m = ds.messages[idx];
    const auto it = column.scores.find(m.id);
    if (it == column.scores.end()) {
      if (missing++ == 0) first_missing = m.id;
      continue;
    }
    out.ids.push_back(m.id);
    out.p_pos.push_back(it->second.p_pos);
    out.truths.push_back(m.binary_class);
  }
  if (missing > 0)
    throw Error("classifier " + column.classifier + " has no scores for " + std::to_string(missing) +
                " " + std::string(corpus::to_string(part)) + " message(s) of dataset " + ds.name +
                " (first: " + first_missing + ")");
  return out;
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::precision: return "precision";
    case Metric::recall: return "recall";
    case Metric::f1: return "f1";
    case Metric::auc: return "auc";
  }
  return "?";
}

std::optional<double> EvalCell::value(Metric m) const {
  switch (m) {
    case Metric::precision: return metrics.precision;
    case Metric::recall: return metrics.recall;
    case Metric::f1: return metrics.f1;
    case Metric::auc: return auc;
  }
  return std::nullopt;
}

const EvalCell& EvalGrid::at(std::string_view classifier, std::string_view dataset) const {
  const auto r = std::find(classifiers.begin(), classifiers.end(), classifier);
  const auto c = std::find(datasets.begin(), datasets.end(), dataset);
  if (r == classifiers.end() || c == datasets.end())
    throw Error("grid has no cell (" + std::string(classifier) + ", " + std::string(dataset) + ")");
  return at(static_cast<std::size_t>(r - classifiers.begin()), static_cast<std::size_t>(c - datasets.begin()));
}

void mark_column_best(EvalGrid& grid) {
  const std::size_t rows = grid.classifiers.size(), cols = grid.datasets.size();
  for (std::size_t c = 0; c < cols; ++c) {
    for (Metric metric : {Metric::precision, Metric::recall, Metric::f1, Metric::auc}) {
      std::optional<double> best;
      for (std::size_t r = 0; r < rows; ++r) {
        const auto v = grid.cells[r * cols + c].value(metric);
        if (v && (!best || *v > *best)) best = v;
      }
      for (std::size_t r = 0; r < rows; ++r) {
        auto& cell = grid.cells[r * cols + c];
        const auto v = cell.value(metric);
        cell.best[static_cast<std::size_t>(metric)] = best && v && *v == *best;
      }
    }
  }
}

EvalGrid cross_grid(const std::vector<std::string>& classifiers,
                    const std::vector<classify::ScoreColumn>& columns,
                    const std::vector<corpus::LabeledDataset>& datasets, int threads) {
  std::map<std::pair<std::string, std::string>, const classify::ScoreColumn*> lookup;
  for (const auto& col : columns) lookup[{col.classifier, col.dataset}] = &col;
  EvalGrid grid;
  grid.classifiers = classifiers;
  for (const auto& ds : datasets) grid.datasets.push_back(ds.name);
  const std::size_t cols = datasets.size();
  for (const auto& clf : classifiers)
    for (const auto& ds : datasets)
      if (!lookup.contains({clf, ds.name}))
        throw Error("missing scores for classifier " + clf + " on dataset " + ds.name);
  grid.cells.resize(classifiers.size() * cols);
  parallel_for(grid.cells.size(), threads, [&](std::size_t k) {
    const auto& clf = classifiers[k / cols];
    const auto& ds = datasets[k % cols];
    const LabeledScores s = gather(*lookup.at({clf, ds.name}), ds, corpus::SplitPart::test);
    EvalCell cell;
    cell.trained_on = clf;
    cell.tested_on = ds.name;
    cell.counts = confusion(s.p_pos, s.truths);
    cell.metrics = precision_recall_f1(cell.counts);
    const bool both = (cell.counts.tp + cell.counts.fn) > 0 && (cell.counts.tn + cell.counts.fp) > 0;
    if (both) cell.auc = auc(s.p_pos, s.truths);
    grid.cells[k] = std::move(cell);
  });
  mark_column_best(grid);
  return grid;
}

std::vector<SimilarityAucPoint> similarity_auc_export(const EvalGrid& grid,
                                                      const vocab_sim::SimilarityMatrix& sims) {
  const auto has = [&](const std::string& name) {
    return std::find(sims.names.begin(), sims.names.end(), name) != sims.names.end();
  };
  for (const auto& names : {grid.classifiers, grid.datasets})
    for (const auto& name : names)
      for (BinaryClass c : {BinaryClass::negative, BinaryClass::positive})
        if (!has(vocab_sim::class_corpus_name(name, c)))
          throw Error("similarity matrix has no corpus for dataset \"" + name + "\"");
  std::vector<SimilarityAucPoint> out;
  for (const auto& cell : grid.cells) {
    SimilarityAucPoint p;
    p.trained_on = cell.trained_on;
    p.tested_on = cell.tested_on;
    p.sim_pos = sims.at(vocab_sim::class_corpus_name(cell.trained_on, BinaryClass::positive),
                        vocab_sim::class_corpus_name(cell.tested_on, BinaryClass::positive));
    p.sim_neg = sims.at(vocab_sim::class_corpus_name(cell.trained_on, BinaryClass::negative),
                        vocab_sim::class_corpus_name(cell.tested_on, BinaryClass::negative));
    p.auc = cell.auc;
    out.push_back(std::move(p));
  }
  return out;
}

void write_grid_csv(std::ostream& out, const EvalGrid& grid, Metric metric, std::string_view row_header) {
  out << row_header;
  for (const auto& d : grid.datasets) out << ',' << csv_field(d);
  out << '\n';
  for (std::size_t r = 0; r < grid.classifiers.size(); ++r) {
    out << csv_field(grid.classifiers[r]);
    for (std::size_t c = 0; c < grid.datasets.size(); ++c) {
      const auto& cell = grid.at(r, c);
      out << ',' << format_optional(cell.value(metric), 2);
      if (cell.best[static_cast<std::size_t>(metric)]) out << '*';
    }
    out << '\n';
  }
}

nlohmann::json to_json(const EvalGrid& grid) {
  const auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& cell : grid.cells) {
    nlohmann::json best = nlohmann::json::object();
    for (Metric m : {Metric::precision, Metric::recall, Metric::f1, Metric::auc})
      best[std::string(to_string(m))] = cell.best[static_cast<std::size_t>(m)];
    cells.push_back({{"trained_on", cell.trained_on},
                     {"tested_on", cell.tested_on},
                     {"tp", cell.counts.tp},
                     {"fp", cell.counts.fp},
                     {"tn", cell.counts.tn},
                     {"fn", cell.counts.fn},
                     {"precision", opt(cell.metrics.precision)},
                     {"recall", opt(cell.metrics.recall)},
                     {"f1", opt(cell.metrics.f1)},
                     {"auc", opt(cell.auc)},
                     {"best", std::move(best)}});
  }
  return {{"classifiers", grid.classifiers}, {"datasets", grid.datasets}, {"cells", std::move(cells)}};
}

void write_similarity_auc_csv(std::ostream& out, const std::vector<SimilarityAucPoint>& points) {
  out << "trained_on,tested_on,sim_pos,sim_neg,auc\n";
  for (const auto& p : points)
    out << csv_field(p.trained_on) << ',' << csv_field(p.tested_on) << ',' << format_fixed(p.sim_pos, 6)
        << ',' << format_fixed(p.sim_neg, 6) << ',' << format_optional(p.auc, 6) << '\n';
}

}  // namespace xcorpus::evaluate
