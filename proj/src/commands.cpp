#include "xcorpus/commands.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

#include "xcorpus/embed_project.hpp"
#include "xcorpus/error.hpp"
#include "xcorpus/rng.hpp"
#include "xcorpus/text_io.hpp"

namespace xcorpus::commands {

using corpus::BinaryClass;
using corpus::LabeledDataset;
using corpus::SplitPart;

namespace {

void note(std::ostream* log, const std::string& line) {
  if (log) *log << line << '\n';
}

classify::TrainConfig train_config(const RunConfig& cfg, std::string_view name) {
  classify::TrainConfig t = cfg.train;
  t.seed = stage_seed(cfg, "train", name);
  t.threads = cfg.threads;
  return t;
}

}  // namespace

std::uint64_t stage_seed(const RunConfig& cfg, std::string_view stage, std::string_view name) {
  return derive_seed(cfg.seed, std::string(stage) + "/" + std::string(name));
}

std::vector<LabeledDataset> load_datasets(const RunConfig& cfg, std::ostream* log) {
  cfg.validate();
  std::vector<LabeledDataset> out;
  for (const auto& spec : cfg.datasets) {
    LabeledDataset ds = corpus::ingest(spec.path, spec.merge_rule, spec.name, cfg.threads);
    if (!spec.predefined_split)
      for (auto& m : ds.messages) m.predefined_split.reset();
    ds = corpus::split(std::move(ds), stage_seed(cfg, "split", spec.name));
    note(log, "loaded " + ds.name + ": " + std::to_string(ds.size()) + " messages");
    out.push_back(std::move(ds));
  }
  return out;
}

const classify::ScoreColumn& BaseScores::column(std::string_view classifier,
                                                std::string_view dataset) const {
  for (const auto& c : columns)
    if (c.classifier == classifier && c.dataset == dataset) return c;
  throw Error("missing scores for classifier " + std::string(classifier) + " on dataset " +
              std::string(dataset));
}

BaseScores base_scores(const RunConfig& cfg, const std::vector<LabeledDataset>& datasets,
                       std::ostream* log) {
  BaseScores base;
  if (!cfg.external_scores) {
    for (const auto& ds : datasets) {
      classify::TrainReport report;
      base.models.push_back(classify::train(ds, train_config(cfg, ds.name), &report));
      base.reports.push_back(std::move(report));
      base.classifiers.push_back(ds.name);
      note(log, "trained " + ds.name + " (epoch " + std::to_string(base.reports.back().selected_epoch + 1) + ")");
    }
    for (std::size_t k = 0; k < datasets.size(); ++k)
      for (const auto& ds : datasets)
        base.columns.push_back(classify::score_dataset(base.models[k], base.classifiers[k], ds, cfg.threads));
    return base;
  }

  const auto& dir = *cfg.external_scores;
  if (!std::filesystem::is_directory(dir)) throw Error("external score directory " + dir.string() + " not found");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::map<std::string, const LabeledDataset*> by_name;
  for (const auto& ds : datasets) by_name[ds.name] = &ds;
  std::set<std::string> names;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& f : files) {
    const auto [clf, dsname] = classify::peek_score_header(f);
    const auto it = by_name.find(dsname);
    if (it == by_name.end()) throw Error(f.string() + ": unknown dataset " + dsname);
    if (!seen.insert({clf, dsname}).second)
      throw Error(f.string() + ": second score file for (" + clf + ", " + dsname + ")");
    auto col = classify::load_external_scores(f, *it->second);
    if (clf == "DM") {
      base.dm_columns.push_back(std::move(col));
    } else {
      names.insert(clf);
      base.columns.push_back(std::move(col));
    }
  }
  // Classifiers named after datasets keep dataset order; others follow sorted.
  for (const auto& ds : datasets)
    if (names.erase(ds.name)) base.classifiers.push_back(ds.name);
  base.classifiers.insert(base.classifiers.end(), names.begin(), names.end());
  if (base.classifiers.empty()) throw Error("no external score files in " + dir.string());
  note(log, "loaded " + std::to_string(base.columns.size()) + " external score files");
  return base;
}

GridResult run_eval_grid(const RunConfig& cfg, const std::vector<LabeledDataset>& datasets,
                         const BaseScores& base) {
  GridResult r;
  r.grid = evaluate::cross_grid(base.classifiers, base.columns, datasets, cfg.threads);
  r.sims = vocab_sim::similarity_matrix(vocab_sim::build_index(datasets, cfg.threads), cfg.threads);
  std::set<std::string> ds_names;
  for (const auto& ds : datasets) ds_names.insert(ds.name);
  const bool named_by_dataset = std::all_of(base.classifiers.begin(), base.classifiers.end(),
                                            [&](const std::string& c) { return ds_names.contains(c); });
  if (named_by_dataset) r.points = evaluate::similarity_auc_export(r.grid, r.sims);
  return r;
}

namespace {

std::vector<ensemble::EnsembleInput> gather_inputs(const BaseScores& base, const LabeledDataset& ds,
                                                   const std::vector<std::size_t>& indices) {
  std::vector<const classify::ScoreColumn*> cols;
  for (const auto& clf : base.classifiers) cols.push_back(&base.column(clf, ds.name));
  std::vector<ensemble::EnsembleInput> inputs;
  inputs.reserve(indices.size());
  for (std::size_t idx : indices) {
    ensemble::EnsembleInput in;
    for (const auto* col : cols) in.push_back(col->at(ds.messages[idx].id));
    inputs.push_back(std::move(in));
  }
  return inputs;
}

}  // namespace

EnsembleResult run_ensemble(const RunConfig& cfg, const std::vector<LabeledDataset>& datasets,
                            const BaseScores& base, std::ostream* log) {
  EnsembleResult result;
  const auto wants = [&](ensemble::Strategy s) {
    return std::find(cfg.ensemble_set.begin(), cfg.ensemble_set.end(), s) != cfg.ensemble_set.end();
  };
  if (cfg.ensemble_set.empty()) throw UsageError("ensemble_set is empty");

  if (wants(ensemble::Strategy::LL)) {
    std::vector<std::string> ids;
    std::vector<ensemble::EnsembleInput> inputs;
    std::vector<BinaryClass> truths;
    for (const auto& ds : datasets) {
      const auto val = ds.indices(SplitPart::val);
      auto in = gather_inputs(base, ds, val);
      for (std::size_t k = 0; k < val.size(); ++k) {
        ids.push_back(ds.name + "/" + ds.messages[val[k]].id);
        truths.push_back(ds.messages[val[k]].binary_class);
        inputs.push_back(std::move(in[k]));
      }
    }
    result.combiner = ensemble::train_combiner(base.classifiers, ids, inputs, truths,
                                               train_config(cfg, "LL"));
    note(log, "trained LL combiner on " + std::to_string(ids.size()) + " validation messages");
  }

  if (wants(ensemble::Strategy::DM)) {
    if (!base.dm_columns.empty()) {
      result.dm_columns = base.dm_columns;
    } else {
      if (datasets.size() < 2) throw UsageError("DM needs at least two datasets");
      const LabeledDataset merged = ensemble::merge_datasets(datasets, "DM");
      result.merged_model = classify::train(merged, train_config(cfg, "DM"));
      for (const auto& ds : datasets)
        result.dm_columns.push_back(classify::score_dataset(*result.merged_model, "DM", ds, cfg.threads));
      note(log, "trained DM on " + std::to_string(merged.size()) + " merged messages");
    }
  }

  auto& report = result.report;
  report.strategies = cfg.ensemble_set;
  for (const auto& ds : datasets) report.datasets.push_back(ds.name);
  report.counts.assign(report.strategies.size() * datasets.size(), {});
  for (std::size_t c = 0; c < datasets.size(); ++c) {
    const auto& ds = datasets[c];
    const auto test = ds.indices(SplitPart::test);
    const auto inputs = gather_inputs(base, ds, test);
    std::vector<BinaryClass> truths;
    for (std::size_t idx : test) truths.push_back(ds.messages[idx].binary_class);
    for (std::size_t r = 0; r < report.strategies.size(); ++r) {
      const auto s = report.strategies[r];
      std::vector<double> decided(test.size());
      if (s == ensemble::Strategy::DM) {
        const auto it = std::find_if(result.dm_columns.begin(), result.dm_columns.end(),
                                     [&](const auto& col) { return col.dataset == ds.name; });
        if (it == result.dm_columns.end()) throw Error("missing DM scores for dataset " + ds.name);
        for (std::size_t k = 0; k < test.size(); ++k) decided[k] = it->at(ds.messages[test[k]].id).p_pos;
      } else {
        for (std::size_t k = 0; k < test.size(); ++k) {
          const BinaryClass v = s == ensemble::Strategy::LL ? result.combiner->verdict(inputs[k])
                                                            : ensemble::combine(s, inputs[k]);
          decided[k] = v == BinaryClass::positive ? 1.0 : 0.0;
        }
      }
      report.counts[r * datasets.size() + c] = evaluate::confusion(decided, truths);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

void cmd_stats(const RunConfig& cfg, std::ostream* log) {
  const auto datasets = load_datasets(cfg, log);
  OutputStage out;
  corpus::write_stats_csv(out.open(cfg.output_dir / "stats.csv"), datasets);
  out.commit();
}

void cmd_similarity(const RunConfig& cfg, std::ostream* log) {
  const auto datasets = load_datasets(cfg, log);
  const auto index = vocab_sim::build_index(datasets, cfg.threads);
  const auto matrix = vocab_sim::similarity_matrix(index, cfg.threads);
  std::vector<std::pair<std::string, vocab_sim::TopTerms>> top;
  nlohmann::json top_summary = nlohmann::json::object();
  for (const auto& name : index.corpora) {
    auto t = vocab_sim::top_k_terms(index, name, cfg.top_k);
    if (t.exhausted)
      note(log, "corpus " + name + " has only " + std::to_string(t.terms.size()) + " distinct words");
    top_summary[name] = {{"count", t.terms.size()}, {"exhausted", t.exhausted}};
    top.emplace_back(name, std::move(t));
  }
  const auto empty = index.empty_corpora();
  for (const auto& e : empty) note(log, "corpus " + e + " is empty");
  nlohmann::json j = vocab_sim::to_json(matrix);
  j["empty_corpora"] = empty;
  j["top_k"] = cfg.top_k;
  j["top_terms"] = std::move(top_summary);

  OutputStage out;
  vocab_sim::write_matrix_csv(out.open(cfg.output_dir / "similarity.csv"), matrix);
  out.open(cfg.output_dir / "similarity.json") << j.dump(2) << '\n';
  vocab_sim::write_top_terms_csv(out.open(cfg.output_dir / "top_terms.csv"), top);
  out.commit();
}

void cmd_tsne(const RunConfig& cfg, std::ostream* log) {
  if (!cfg.embedding_path) throw UsageError("tsne needs embedding_path in the config");
  if (!std::filesystem::exists(*cfg.embedding_path))
    throw Error("embedding file " + cfg.embedding_path->string() + " does not exist");
  const auto datasets = load_datasets(cfg, log);
  const auto index = vocab_sim::build_index(datasets, cfg.threads);
  std::vector<embed::WordLabel> labels;
  std::set<std::string> words;
  for (const auto& ds : datasets)
    for (BinaryClass c : {BinaryClass::negative, BinaryClass::positive}) {
      const auto top = vocab_sim::top_k_terms(index, vocab_sim::class_corpus_name(ds.name, c), cfg.top_k);
      for (const auto& [word, weight] : top.terms) {
        labels.push_back({word, ds.name, c});
        words.insert(word);
      }
    }
  const auto loaded = embed::load_embeddings(*cfg.embedding_path, words);
  std::vector<embed::WordLabel> kept;
  for (auto& l : labels)
    if (loaded.table.vectors.contains(l.word)) kept.push_back(std::move(l));
  note(log, std::to_string(kept.size()) + " words projected, " + std::to_string(loaded.missing.size()) +
                " without embeddings");
  embed::ProjectionConfig pc = cfg.tsne;
  pc.seed = stage_seed(cfg, "tsne", "projection");
  pc.threads = cfg.threads;
  std::vector<std::string> warnings;
  const auto points = embed::tsne(loaded.table, pc, kept, &warnings);
  for (const auto& w : warnings) note(log, "warning: " + w);

  OutputStage out;
  embed::write_projection_csv(out.open(cfg.output_dir / "projection.csv"), points);
  auto& missing = out.open(cfg.output_dir / "projection_missing.txt");
  for (const auto& w : loaded.missing) missing << w << '\n';
  out.commit();
}

void cmd_train(const RunConfig& cfg, std::ostream* log) {
  if (cfg.external_scores) throw UsageError("train needs the builtin_linear classifier");
  const auto datasets = load_datasets(cfg, log);
  OutputStage out;
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& ds : datasets) {
    classify::TrainReport report;
    const auto model = classify::train(ds, train_config(cfg, ds.name), &report);
    classify::save_model(out.open(cfg.output_dir / "models" / (ds.name + ".model.json")), model);
    nlohmann::json f1 = nlohmann::json::array();
    for (double v : report.val_f1) f1.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
    summary.push_back({{"dataset", ds.name}, {"selected_epoch", report.selected_epoch}, {"val_f1", f1}});
    note(log, "trained " + ds.name);
  }
  out.open(cfg.output_dir / "train_report.json") << summary.dump(2) << '\n';
  out.commit();
}

void cmd_eval_grid(const RunConfig& cfg, std::ostream* log) {
  const auto datasets = load_datasets(cfg, log);
  const auto base = base_scores(cfg, datasets, log);
  const auto r = run_eval_grid(cfg, datasets, base);
  OutputStage out;
  evaluate::write_grid_csv(out.open(cfg.output_dir / "grid_precision.csv"), r.grid, evaluate::Metric::precision);
  evaluate::write_grid_csv(out.open(cfg.output_dir / "grid_recall.csv"), r.grid, evaluate::Metric::recall);
  evaluate::write_grid_csv(out.open(cfg.output_dir / "grid_f1.csv"), r.grid, evaluate::Metric::f1);
  evaluate::write_grid_csv(out.open(cfg.output_dir / "grid_auc.csv"), r.grid, evaluate::Metric::auc);
  out.open(cfg.output_dir / "grid.json") << evaluate::to_json(r.grid).dump(2) << '\n';
  if (!r.points.empty())
    evaluate::write_similarity_auc_csv(out.open(cfg.output_dir / "similarity_auc.csv"), r.points);
  else
    note(log, "classifier names are not dataset names; similarity/AUC export skipped");
  out.commit();
}

void cmd_ensemble(const RunConfig& cfg, std::ostream* log) {
  const auto datasets = load_datasets(cfg, log);
  const auto base = base_scores(cfg, datasets, log);
  const auto r = run_ensemble(cfg, datasets, base, log);
  OutputStage out;
  ensemble::write_report_csv(out.open(cfg.output_dir / "ensemble_precision.csv"), r.report, evaluate::Metric::precision);
  ensemble::write_report_csv(out.open(cfg.output_dir / "ensemble_recall.csv"), r.report, evaluate::Metric::recall);
  out.open(cfg.output_dir / "ensemble.json") << ensemble::to_json(r.report).dump(2) << '\n';
  if (r.combiner) ensemble::save_combiner(out.open(cfg.output_dir / "models" / "LL.combiner.json"), *r.combiner);
  if (r.merged_model) classify::save_model(out.open(cfg.output_dir / "models" / "DM.model.json"), *r.merged_model);
  out.commit();
}

synth::SyntheticFiles cmd_synth(const synth::SyntheticSpec& spec, const std::filesystem::path& dir) {
  return synth::write_synthetic(spec, dir);
}

}  // namespace xcorpus::commands
