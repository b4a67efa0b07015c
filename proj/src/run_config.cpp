#include "xcorpus/run_config.hpp"

#include <fstream>
#include <set>

namespace xcorpus {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  RunConfig cfg;
  try {
    for (const auto& d : j.value("datasets", nlohmann::json::array())) {
      DatasetSpec spec;
      spec.name = d.at("name").get<std::string>();
      spec.path = resolve(base_dir, d.at("path").get<std::string>());
      const auto& rule = d.at("merge_rule");
      spec.merge_rule = rule.is_string()
                            ? corpus::MergeRule::load(resolve(base_dir, rule.get<std::string>()))
                            : corpus::MergeRule::from_json(rule);
      spec.predefined_split = d.value("predefined_split", false);
      cfg.datasets.push_back(std::move(spec));
    }
    cfg.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("output_dir")) cfg.output_dir = resolve(base_dir, j["output_dir"].get<std::string>());
    if (j.contains("embedding_path") && !j["embedding_path"].is_null())
      cfg.embedding_path = resolve(base_dir, j["embedding_path"].get<std::string>());
    const std::string classifier = j.value("classifier", std::string("builtin_linear"));
    if (classifier.rfind("external:", 0) == 0) {
      cfg.external_scores = resolve(base_dir, classifier.substr(9));
    } else if (classifier != "builtin_linear") {
      throw UsageError("classifier must be \"builtin_linear\" or \"external:<dir>\"");
    }
    if (j.contains("ensemble_set")) {
      cfg.ensemble_set.clear();
      for (const auto& s : j["ensemble_set"]) {
        const auto parsed = ensemble::parse_strategy(s.get<std::string>());
        if (!parsed) throw UsageError("unknown ensemble strategy " + s.dump());
        cfg.ensemble_set.push_back(*parsed);
      }
    }
    cfg.top_k = j.value("top_k", cfg.top_k);
    if (j.contains("train")) cfg.train = classify::TrainConfig::from_json(j["train"], cfg.train);
    if (j.contains("tsne")) {
      const auto& t = j["tsne"];
      auto& p = cfg.tsne;
      p.perplexity = t.value("perplexity", p.perplexity);
      p.iterations = t.value("iterations", p.iterations);
      p.learning_rate = t.value("learning_rate", p.learning_rate);
      p.early_exaggeration = t.value("early_exaggeration", p.early_exaggeration);
      p.exaggeration_iterations = t.value("exaggeration_iterations", p.exaggeration_iterations);
      p.initial_momentum = t.value("initial_momentum", p.initial_momentum);
      p.final_momentum = t.value("final_momentum", p.final_momentum);
      p.momentum_switch_iteration = t.value("momentum_switch_iteration", p.momentum_switch_iteration);
      p.adaptive_gains = t.value("adaptive_gains", p.adaptive_gains);
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("invalid config: ") + e.what());
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

void RunConfig::validate() const {
  if (datasets.empty()) throw UsageError("config lists no datasets");
  std::set<std::string> names;
  for (const auto& d : datasets) {
    if (d.name.empty()) throw UsageError("dataset names must be non-empty");
    if (!names.insert(d.name).second) throw UsageError("duplicate dataset name " + d.name);
  }
  if (top_k < 1) throw UsageError("top_k must be >= 1");
}

}  // namespace xcorpus
