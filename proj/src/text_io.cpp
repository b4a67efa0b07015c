#include "xcorpus/text_io.hpp"

#include <charconv>
#include <cstdio>

#include "xcorpus/error.hpp"

namespace xcorpus {

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

std::string format_exact(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

std::string format_optional(const std::optional<double>& value, int decimals) {
  return value ? format_fixed(*value, decimals) : std::string();
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

OutputStage::~OutputStage() {
  if (committed_) return;
  for (std::size_t i = 0; i < streams_.size(); ++i) {
    streams_[i]->close();
    std::error_code ec;
    std::filesystem::remove(finals_[i].string() + ".partial", ec);
  }
}

std::ostream& OutputStage::open(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto stream = std::make_unique<std::ofstream>(path.string() + ".partial", std::ios::binary);
  if (!*stream) throw Error("cannot open output file " + path.string());
  finals_.push_back(path);
  streams_.push_back(std::move(stream));
  return *streams_.back();
}

void OutputStage::commit() {
  for (std::size_t i = 0; i < streams_.size(); ++i) {
    streams_[i]->flush();
    if (!*streams_[i]) throw Error("write failed for " + finals_[i].string());
    streams_[i]->close();
  }
  for (const auto& path : finals_)
    std::filesystem::rename(path.string() + ".partial", path);
  committed_ = true;
}

}  // namespace xcorpus
