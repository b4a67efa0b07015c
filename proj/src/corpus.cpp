#include "xcorpus/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "xcorpus/error.hpp"
#include "xcorpus/parallel.hpp"
#include "xcorpus/rng.hpp"

namespace xcorpus::corpus {

std::string_view to_string(BinaryClass c) {
  return c == BinaryClass::positive ? "positive" : "negative";
}

std::string_view to_string(SplitPart p) {
  switch (p) {
    case SplitPart::train: return "train";
    case SplitPart::val: return "val";
    case SplitPart::test: return "test";
  }
  return "?";
}

std::optional<SplitPart> parse_split_part(std::string_view text) {
  if (text == "train") return SplitPart::train;
  if (text == "val") return SplitPart::val;
  if (text == "test") return SplitPart::test;
  return std::nullopt;
}

BinaryClass MergeRule::apply(const std::set<std::string>& source_labels) const {
  if (mode == Mode::any) {
    for (const auto& label : source_labels)
      if (positive_labels.contains(label)) return BinaryClass::positive;
    return BinaryClass::negative;
  }
  if (positive_labels.empty()) return BinaryClass::negative;
  for (const auto& label : positive_labels)
    if (!source_labels.contains(label)) return BinaryClass::negative;
  return BinaryClass::positive;
}

MergeRule MergeRule::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("positive_labels") || !j["positive_labels"].is_array())
    throw Error("merge rule needs a positive_labels array");
  MergeRule rule;
  for (const auto& label : j["positive_labels"]) {
    if (!label.is_string()) throw Error("merge rule labels must be strings");
    rule.positive_labels.insert(label.get<std::string>());
  }
  const std::string mode = j.value("mode", std::string("any"));
  if (mode == "any") {
    rule.mode = Mode::any;
  } else if (mode == "all") {
    rule.mode = Mode::all;
  } else {
    throw Error("merge rule mode must be \"any\" or \"all\", got \"" + mode + "\"");
  }
  return rule;
}

MergeRule MergeRule::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open merge rule " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid merge rule " + path.string() + ": " + e.what());
  }
}

nlohmann::json MergeRule::to_json() const {
  return {{"positive_labels", positive_labels}, {"mode", mode == Mode::any ? "any" : "all"}};
}

std::vector<std::size_t> LabeledDataset::indices(SplitPart part) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == part) out.push_back(i);
  return out;
}

namespace {

Message parse_record(std::string_view line, std::size_t line_no, const MergeRule& merge) {
  const auto where = [&] { return "line " + std::to_string(line_no) + ": "; };
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw Error(where() + "malformed JSON record");
  }
  if (!j.is_object()) throw Error(where() + "record is not a JSON object");
  Message m;
  if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty())
    throw Error(where() + "missing or empty string field \"id\"");
  m.id = j["id"].get<std::string>();
  if (!j.contains("text") || !j["text"].is_string())
    throw Error(where() + "missing string field \"text\"");
  m.text = j["text"].get<std::string>();
  if (!j.contains("labels") || !j["labels"].is_array())
    throw Error(where() + "missing array field \"labels\"");
  for (const auto& label : j["labels"]) {
    if (!label.is_string()) throw Error(where() + "labels must be strings");
    m.source_labels.insert(label.get<std::string>());
  }
  if (j.contains("split") && !j["split"].is_null()) {
    const auto part = j["split"].is_string()
                          ? parse_split_part(j["split"].get<std::string>())
                          : std::nullopt;
    if (!part) throw Error(where() + "split must be \"train\", \"val\" or \"test\"");
    m.predefined_split = part;
  }
  m.binary_class = merge.apply(m.source_labels);
  return m;
}

}  // namespace

LabeledDataset ingest(std::istream& in, const MergeRule& merge, std::string name, int threads) {
  LabeledDataset ds;
  ds.name = std::move(name);
  ds.merge_rule = merge;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Message m = parse_record(line, line_no, merge);
    if (!seen.insert(m.id).second) throw Error("duplicate message id \"" + m.id + "\"");
    ds.messages.push_back(std::move(m));
  }
  parallel_for(ds.messages.size(), threads,
               [&](std::size_t i) { ds.messages[i].tokens = tokenize(ds.messages[i].text); });
  return ds;
}

LabeledDataset ingest(const std::filesystem::path& path, const MergeRule& merge, std::string name,
                      int threads) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset " + path.string());
  try {
    return ingest(in, merge, std::move(name), threads);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::array<std::size_t, 3> split_sizes(std::size_t n) {
  // round(0.2 * n) with halves rounded up, in exact integer arithmetic.
  const std::size_t test = (2 * n + 5) / 10;
  const std::size_t val = (2 * (n - test) + 5) / 10;
  return {n - test - val, val, test};
}

LabeledDataset split(LabeledDataset ds, std::uint64_t seed) {
  const std::size_t n = ds.messages.size();
  const auto predefined = std::count_if(ds.messages.begin(), ds.messages.end(),
                                        [](const Message& m) { return m.predefined_split.has_value(); });
  ds.split_seed = seed;
  if (predefined > 0) {
    if (static_cast<std::size_t>(predefined) != n)
      throw Error("dataset " + ds.name + ": predefined split present on only " +
                  std::to_string(predefined) + " of " + std::to_string(n) + " records");
    ds.assignment.resize(n);
    for (std::size_t i = 0; i < n; ++i) ds.assignment[i] = *ds.messages[i].predefined_split;
    if (ds.indices(SplitPart::train).empty() || ds.indices(SplitPart::test).empty())
      throw Error("dataset " + ds.name + ": predefined split needs non-empty train and test parts");
    return ds;
  }
  if (n < 5)
    throw Error("dataset " + ds.name + ": need at least 5 messages to split, have " +
                std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(std::span(order), rng);
  const auto [train, val, test] = split_sizes(n);
  ds.assignment.assign(n, SplitPart::train);
  for (std::size_t k = 0; k < test; ++k) ds.assignment[order[k]] = SplitPart::test;
  for (std::size_t k = test; k < test + val; ++k) ds.assignment[order[k]] = SplitPart::val;
  return ds;
}

// ---------------------------------------------------------------------------
// Tokenizer

namespace {

constexpr char32_t kReplacement = 0xFFFD;

std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int extra = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      extra = 1;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      extra = 2;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      extra = 3;
      cp = b0 & 0x07;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      if (i + k >= s.size()) {
        ok = false;
        break;
      }
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

bool is_space(char32_t c) {
  return c == U' ' || (c >= U'\t' && c <= U'\r') || c == 0x85 || c == 0xA0 || c == 0x1680 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F ||
         c == 0x205F || c == 0x3000;
}

bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= U'!' && c <= U'/') || (c >= U':' && c <= U'@') || (c >= U'[' && c <= U'`') ||
           (c >= U'{' && c <= U'~');
  }
  return c == 0xA1 || c == 0xAB || c == 0xB7 || c == 0xBB || c == 0xBF ||
         (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) ||
         (c >= 0x3001 && c <= 0x3003) || (c >= 0x3008 && c <= 0x3011);
}

char32_t to_lower(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if (c < 0xC0) return c;
  // Latin-1 supplement (skipping the multiplication sign).
  if (c <= 0xDE && c != 0xD7) return c + 32;
  // Latin Extended-A: upper/lower pairs alternate.
  if (c >= 0x100 && c <= 0x137 && c % 2 == 0) return c + 1;
  if (c >= 0x139 && c <= 0x148 && c % 2 == 1) return c + 1;
  if (c >= 0x14A && c <= 0x177 && c % 2 == 0) return c + 1;
  if (c == 0x178) return 0xFF;
  if (c >= 0x179 && c <= 0x17E && c % 2 == 1) return c + 1;
  // Greek and Cyrillic.
  if (c >= 0x391 && c <= 0x3AB && c != 0x3A2) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  return c;
}

bool is_apostrophe(char32_t c) { return c == U'\'' || c == 0x2019; }

// Length (in code points) of a contraction suffix ending the word, or 0.
std::size_t contraction_suffix(const std::vector<char32_t>& w, std::size_t begin, std::size_t end) {
  const std::size_t len = end - begin;
  if (len >= 4 && w[end - 3] == U'n' && is_apostrophe(w[end - 2]) && w[end - 1] == U't')
    return 3;
  if (len >= 4 && is_apostrophe(w[end - 3])) {
    const char32_t a = w[end - 2], b = w[end - 1];
    if ((a == U'r' && b == U'e') || (a == U'l' && b == U'l') || (a == U'v' && b == U'e'))
      return 3;
  }
  if (len >= 3 && is_apostrophe(w[end - 2])) {
    const char32_t a = w[end - 1];
    if (a == U's' || a == U'd' || a == U'm') return 2;
  }
  return 0;
}

std::string encode(const std::vector<char32_t>& cps, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) append_utf8(out, cps[i]);
  return out;
}

void emit_word(const std::vector<char32_t>& cps, std::size_t begin, std::size_t end,
               TokenStream& out) {
  std::size_t b = begin;
  std::size_t e = end;
  while (b < e && is_punct(cps[b])) {
    out.push_back(encode(cps, b, b + 1));
    ++b;
  }
  std::vector<std::string> trailing;
  while (e > b && is_punct(cps[e - 1])) {
    trailing.push_back(encode(cps, e - 1, e));
    --e;
  }
  if (b < e) {
    const std::size_t suffix = contraction_suffix(cps, b, e);
    if (suffix > 0) {
      out.push_back(encode(cps, b, e - suffix));
      out.push_back(encode(cps, e - suffix, e));
    } else {
      out.push_back(encode(cps, b, e));
    }
  }
  out.insert(out.end(), trailing.rbegin(), trailing.rend());
}

}  // namespace

TokenStream tokenize(std::string_view text) {
  std::vector<char32_t> cps = decode_utf8(text);
  for (auto& c : cps) c = to_lower(c);
  TokenStream out;
  std::size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && is_space(cps[i])) ++i;
    const std::size_t start = i;
    while (i < cps.size() && !is_space(cps[i])) ++i;
    if (start < i) emit_word(cps, start, i, out);
  }
  return out;
}

std::array<ClassStats, 2> class_stats(const LabeledDataset& ds) {
  std::array<ClassStats, 2> stats{};
  std::array<std::unordered_set<std::string_view>, 2> vocab;
  for (const auto& m : ds.messages) {
    const auto c = static_cast<std::size_t>(m.binary_class);
    ++stats[c].message_count;
    stats[c].total_words += m.tokens.size();
    for (const auto& t : m.tokens) vocab[c].insert(t);
  }
  for (std::size_t c = 0; c < 2; ++c) stats[c].unique_words = vocab[c].size();
  return stats;
}

void write_stats_csv(std::ostream& out, const std::vector<LabeledDataset>& datasets) {
  out << "dataset,class,messages,unique_words,total_words\n";
  for (const auto& ds : datasets) {
    const auto stats = class_stats(ds);
    for (BinaryClass c : {BinaryClass::negative, BinaryClass::positive}) {
      const auto& s = stats[static_cast<std::size_t>(c)];
      out << ds.name << ',' << to_string(c) << ',' << s.message_count << ',' << s.unique_words
          << ',' << s.total_words << '\n';
    }
  }
}

}  // namespace xcorpus::corpus
