#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace msm {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;  // 1-based source line of each row
  std::vector<std::string> comments;
};

// RFC-4180 reader. `#`-prefixed lines before the header are collected as comments.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

std::string csv_escape(const std::string& field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest round-trip decimal rendering.
std::string format_double(double value);
std::string format_fixed(double value, int decimals);

// 64-bit FNV-1a, used for config hashes in provenance headers.
std::uint64_t fnv1a64(const std::string& data);
std::string hex64(std::uint64_t value);

struct Provenance {
  std::string config_hash;
  std::string seed;  // empty when not applicable
  std::vector<std::pair<std::string, std::string>> extra;
};

void write_provenance(std::ostream& out, const Provenance& prov);

}  // namespace msm
