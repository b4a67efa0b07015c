#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xcorpus {

/// Fixed-point rendering, e.g. format_fixed(0.2119, 3) == "0.212".
std::string format_fixed(double value, int decimals);

/// Shortest text that parses back to exactly `value`.
std::string format_exact(double value);

/// Empty string for an absent value.
std::string format_optional(const std::optional<double>& value, int decimals);

/// Quotes a CSV field when it contains a comma, quote, or newline.
std::string csv_field(std::string_view text);

/// Splits one CSV record (RFC 4180 quoting, no embedded newlines).
std::vector<std::string> split_csv_line(std::string_view line);

/**
 * Output files for one command, written as "<path>.partial" and renamed into
 * place only by commit(). Destroying an uncommitted stage removes every
 * partial file, so a failing command leaves no half-written outputs.
 */
class OutputStage {
 public:
  OutputStage() = default;
  OutputStage(const OutputStage&) = delete;
  OutputStage& operator=(const OutputStage&) = delete;
  ~OutputStage();

  std::ostream& open(const std::filesystem::path& path);
  void commit();
  const std::vector<std::filesystem::path>& paths() const { return finals_; }

 private:
  std::vector<std::filesystem::path> finals_;
  std::vector<std::unique_ptr<std::ofstream>> streams_;
  bool committed_ = false;
};

}  // namespace xcorpus
