#include "xcorpus/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>

#include "xcorpus/error.hpp"
#include "xcorpus/rng.hpp"
#include "xcorpus/text_io.hpp"

namespace xcorpus::synth {

void SyntheticSpec::validate() const {
  if (n_datasets < 1 || n_datasets > 26) throw Error("n_datasets must be in 1..26");
  if (messages_per_dataset < 5) throw Error("messages_per_dataset must be >= 5");
  if (vocab_size < 20) throw Error("vocab_size must be >= 20");
  if (!(positive_rate > 0.0 && positive_rate < 1.0)) throw Error("positive_rate must be in (0, 1)");
  if (!(class_signal_strength >= 0.0 && class_signal_strength <= 1.0))
    throw Error("class_signal_strength must be in [0, 1]");
  if (signal_words_per_dataset < 1) throw Error("signal_words_per_dataset must be >= 1");
  if (skewed_words_per_class < 0 || 2 * skewed_words_per_class > vocab_size / 2)
    throw Error("skewed_words_per_class too large for the vocabulary");
  if (embedding_dim < 2) throw Error("embedding_dim must be >= 2");
}

namespace {

std::string neutral_word(int k) {
  // Pronounceable, lowercase, collision-free: base-10 digits mapped to syllables.
  static constexpr const char* kSyllables[] = {"ka", "lo", "mi", "nu", "pe", "ra", "si", "to", "vu", "ze"};
  std::string w;
  int v = k;
  do {
    w = kSyllables[v % 10] + w;
    v /= 10;
  } while (v > 0);
  return w + "x";
}

std::string dataset_name(int d) { return std::string(1, static_cast<char>('A' + d)); }

class ZipfSampler {
 public:
  explicit ZipfSampler(std::size_t n) : cdf_(n) {
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      total += 1.0 / static_cast<double>(r + 1);
      cdf_[r] = total;
    }
    for (double& c : cdf_) c /= total;
  }
  std::size_t operator()(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

void insert_at_random(std::vector<std::string>& words, std::string w, Rng& rng) {
  const auto pos = static_cast<std::ptrdiff_t>(rng.below(words.size() + 1));
  words.insert(words.begin() + pos, std::move(w));
}

}  // namespace

std::vector<SyntheticDataset> generate(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<std::string> neutral(static_cast<std::size_t>(spec.vocab_size));
  for (int k = 0; k < spec.vocab_size; ++k) neutral[static_cast<std::size_t>(k)] = neutral_word(k);
  const ZipfSampler zipf(neutral.size());
  static constexpr const char* kLabelStems[] = {"insult", "hate", "threat", "obscene", "attack", "toxic"};

  std::vector<SyntheticDataset> out;
  for (int d = 0; d < spec.n_datasets; ++d) {
    SyntheticDataset ds;
    ds.name = dataset_name(d);
    Rng rng(derive_seed(spec.seed, "synth/" + ds.name));
    const std::string prefix(1, static_cast<char>('a' + d));
    // Built from the neutral syllables: no character is exclusive to signal words.
    for (int s = 0; s < spec.signal_words_per_dataset; ++s)
      ds.signal_words.push_back(neutral_word(spec.vocab_size + d * spec.signal_words_per_dataset + s));
    ds.positive_labels = {std::string(kLabelStems[d % 6]) + "_" + prefix,
                          std::string(kLabelStems[(d + 1) % 6]) + "_" + prefix};

    // Skewed neutral words are drawn from the less frequent half of the vocabulary.
    std::vector<std::size_t> tail(neutral.size() / 2);
    std::iota(tail.begin(), tail.end(), neutral.size() - tail.size());
    shuffle(std::span(tail), rng);
    const auto skew = static_cast<std::size_t>(spec.skewed_words_per_class);
    std::vector<std::size_t> pos_skew(tail.begin(), tail.begin() + static_cast<std::ptrdiff_t>(skew));
    std::vector<std::size_t> neg_skew(tail.begin() + static_cast<std::ptrdiff_t>(skew),
                                      tail.begin() + static_cast<std::ptrdiff_t>(2 * skew));
    std::vector<char> reserved(neutral.size(), 0);
    for (auto k : pos_skew) reserved[k] = 1;
    for (auto k : neg_skew) reserved[k] = 1;

    static constexpr const char* kEndings[] = {".", "!", "?", "", "..."};
    for (int i = 0; i < spec.messages_per_dataset; ++i) {
      const bool positive = rng.bernoulli(spec.positive_rate);
      const std::size_t length = 6 + rng.below(10);
      std::vector<std::string> words;
      while (words.size() < length) {
        const std::size_t k = zipf(rng);
        if (!reserved[k]) words.push_back(neutral[k]);
      }
      if (positive) {
        if (rng.bernoulli(spec.class_signal_strength))
          insert_at_random(words, ds.signal_words[rng.below(ds.signal_words.size())], rng);
        if (!pos_skew.empty() && rng.bernoulli(0.5))
          insert_at_random(words, neutral[pos_skew[rng.below(pos_skew.size())]], rng);
      } else if (!neg_skew.empty() && rng.bernoulli(0.5)) {
        insert_at_random(words, neutral[neg_skew[rng.below(neg_skew.size())]], rng);
      }
      words.front()[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(words.front()[0])));
      std::string text;
      for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
      text += kEndings[rng.below(5)];

      SyntheticRecord rec;
      rec.id = ds.name + "-" + std::to_string(i);
      rec.text = std::move(text);
      if (positive) {
        rec.labels.push_back(ds.positive_labels[rng.below(2)]);
        if (rng.bernoulli(0.3)) rec.labels.push_back(ds.positive_labels[0] == rec.labels[0] ? ds.positive_labels[1] : ds.positive_labels[0]);
      } else if (rng.bernoulli(0.2)) {
        rec.labels.push_back("none");
      }
      ds.records.push_back(std::move(rec));
    }
    out.push_back(std::move(ds));
  }
  return out;
}

SyntheticFiles write_synthetic(const SyntheticSpec& spec, const std::filesystem::path& dir) {
  const auto datasets = generate(spec);
  std::filesystem::create_directories(dir);
  SyntheticFiles files;
  OutputStage stage;
  nlohmann::json config_datasets = nlohmann::json::array();
  for (const auto& ds : datasets) {
    const auto path = dir / (ds.name + ".jsonl");
    std::ostream& out = stage.open(path);
    for (const auto& r : ds.records)
      out << nlohmann::json{{"id", r.id}, {"text", r.text}, {"labels", r.labels}}.dump() << '\n';
    files.datasets.push_back(path);
    config_datasets.push_back({{"name", ds.name},
                               {"path", ds.name + ".jsonl"},
                               {"merge_rule", {{"positive_labels", ds.positive_labels}, {"mode", "any"}}}});
  }

  // Neutral words near the origin; each dataset's signal words around their own center.
  files.embeddings = dir / "embeddings.vec";
  {
    Rng rng(derive_seed(spec.seed, "synth/embeddings"));
    const auto dim = static_cast<std::size_t>(spec.embedding_dim);
    std::vector<std::pair<std::string, std::vector<double>>> rows;
    for (int k = 0; k < spec.vocab_size; ++k) {
      std::vector<double> v(dim);
      for (auto& x : v) x = 0.3 * rng.normal();
      rows.emplace_back(neutral_word(k), std::move(v));
    }
    for (const auto& ds : datasets) {
      std::vector<double> center(dim);
      for (auto& x : center) x = 2.0 * rng.normal();
      for (const auto& w : ds.signal_words) {
        std::vector<double> v(dim);
        for (std::size_t k = 0; k < dim; ++k) v[k] = center[k] + 0.3 * rng.normal();
        rows.emplace_back(w, std::move(v));
      }
    }
    std::ostream& out = stage.open(files.embeddings);
    out << rows.size() << ' ' << dim << '\n';
    for (const auto& [word, v] : rows) {
      out << word;
      for (double x : v) out << ' ' << format_fixed(x, 5);
      out << '\n';
    }
  }

  files.config = dir / "config.json";
  const nlohmann::json config = {{"datasets", config_datasets},
                                 {"seed", spec.seed},
                                 {"output_dir", "out"},
                                 {"embedding_path", "embeddings.vec"},
                                 {"classifier", "builtin_linear"},
                                 {"ensemble_set", {"LL", "DV", "SV", "MW", "T0.5", "T0.95", "DM"}}};
  stage.open(files.config) << config.dump(2) << '\n';
  stage.commit();
  return files;
}

}  // namespace xcorpus::synth
