#include "swapreg/csv.hpp"

#include <cstdio>

#include "swapreg/errors.hpp"

namespace swapreg::csvio {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_double(const std::string& field) {
  try {
    std::size_t used = 0;
    double v = std::stod(field, &used);
    if (used != field.size())
      throw ValidationError("trailing characters in number '" + field + "'");
    return v;
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception&) {
    throw ValidationError("expected a number, got '" + field + "'");
  }
}

std::int64_t parse_int(const std::string& field) {
  try {
    std::size_t used = 0;
    std::int64_t v = std::stoll(field, &used);
    if (used != field.size())
      throw ValidationError("trailing characters in integer '" + field + "'");
    return v;
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception&) {
    throw ValidationError("expected an integer, got '" + field + "'");
  }
}

Writer::Writer(const std::filesystem::path& path,
               const std::vector<std::string>& header)
    : out_(path), path_(path) {
  if (!out_) throw ValidationError("cannot open " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

Writer::~Writer() {
  if (!closed_) out_.close();
}

void Writer::field(std::int64_t v) {
  if (row_open_) out_ << ',';
  out_ << v;
  row_open_ = true;
}

void Writer::field(std::uint64_t v) {
  if (row_open_) out_ << ',';
  out_ << v;
  row_open_ = true;
}

void Writer::field(double v) {
  if (row_open_) out_ << ',';
  out_ << format_double(v);
  row_open_ = true;
}

void Writer::field(const std::string& v) {
  if (row_open_) out_ << ',';
  out_ << v;
  row_open_ = true;
}

void Writer::end_row() {
  out_ << '\n';
  row_open_ = false;
}

void Writer::close() {
  out_.close();
  closed_ = true;
  if (out_.fail()) throw ValidationError("write failed for " + path_.string());
}

std::vector<std::vector<std::string>> read_rows(
    const std::filesystem::path& path,
    const std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError(path.string() + ": empty file");
  std::vector<std::string> head = split_line(line);
  if (head != header)
    throw ValidationError(path.string() + ": unexpected header '" + line + "'");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields = split_line(line);
    if (fields.size() != header.size())
      throw ValidationError(path.string() + ": row with " +
                            std::to_string(fields.size()) + " fields, want " +
                            std::to_string(header.size()));
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace swapreg::csvio
