#include "msm/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "msm/version.hpp"

namespace msm {

namespace {

// Reads one logical record; quoted fields may span lines. Returns false at EOF.
bool read_record(std::istream& in, std::vector<std::string>& fields, int& line, int& start_line) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  bool field_was_quoted = false;
  start_line = line + 1;
  int ch;
  while ((ch = in.get()) != EOF) {
    any = true;
    char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      if (!field.empty()) throw CsvError("line " + std::to_string(line + 1) + ": stray quote");
      in_quotes = true;
      field_was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_was_quoted = false;
    } else if (c == '\r') {
      if (in.peek() == '\n') continue;
    } else if (c == '\n') {
      ++line;
      fields.push_back(std::move(field));
      return true;
    } else {
      if (field_was_quoted) {
        throw CsvError("line " + std::to_string(line + 1) + ": text after closing quote");
      }
      field.push_back(c);
    }
  }
  if (in_quotes) throw CsvError("line " + std::to_string(start_line) + ": unterminated quoted field");
  if (!any) return false;
  ++line;
  fields.push_back(std::move(field));
  return true;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  int line = 0;
  bool have_header = false;
  std::vector<std::string> fields;
  int start = 0;
  while (true) {
    if (!have_header && in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
      ++line;
      if (!comment.empty() && comment.back() == '\r') comment.pop_back();
      table.comments.push_back(comment);
      continue;
    }
    if (!read_record(in, fields, line, start)) break;
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (!have_header) {
      table.header = fields;
      have_header = true;
    } else {
      table.rows.push_back(fields);
      table.line_numbers.push_back(start);
    }
  }
  if (!have_header) throw CsvError("missing header row");
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError("cannot open " + path);
  return read_csv(in);
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(fields[i]);
  }
  out << "\r\n";
}

std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) return "NA";
  return std::string(buf, ptr);
}

std::string format_fixed(double value, int decimals) {
  if (std::isnan(value)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

void write_provenance(std::ostream& out, const Provenance& prov) {
  out << "# tool=" << kToolName << " version=" << kVersion << "\r\n";
  out << "# config_hash=" << prov.config_hash << "\r\n";
  if (!prov.seed.empty()) out << "# seed=" << prov.seed << "\r\n";
  for (const auto& [k, v] : prov.extra) out << "# " << k << "=" << v << "\r\n";
}

}  // namespace msm
