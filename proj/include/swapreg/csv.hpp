#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace swapreg::csvio {

/// Minimal CSV support for the tool's own artifacts: numeric fields only,
/// no quoting or escaping, comma separator, one header row. Doubles are
/// printed with %.17g so parsing them back reproduces the exact bits, which
/// is what makes "re-running a config+seed yields byte-identical files"
/// testable.

std::string format_double(double v);

/// Splits one line on commas. Empty fields are preserved.
std::vector<std::string> split_line(const std::string& line);

double parse_double(const std::string& field);
std::int64_t parse_int(const std::string& field);

class Writer {
 public:
  /// Opens the file and writes the header row. Throws ValidationError on
  /// I/O failure (these files are test artifacts; failing loudly beats a
  /// silent partial write).
  Writer(const std::filesystem::path& path,
         const std::vector<std::string>& header);
  ~Writer();

  void field(std::int64_t v);
  void field(std::uint64_t v);
  void field(double v);
  void field(const std::string& v);
  void end_row();

  /// Flushes and closes; throws if the stream went bad at any point.
  void close();

 private:
  std::ofstream out_;
  std::filesystem::path path_;
  bool row_open_ = false;
  bool closed_ = false;
};

/// Reads the whole file, checks the header matches exactly, and returns the
/// data rows split into fields. Throws ValidationError on any mismatch.
std::vector<std::vector<std::string>> read_rows(
    const std::filesystem::path& path, const std::vector<std::string>& header);

}  // namespace swapreg::csvio
