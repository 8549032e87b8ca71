#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oved/influence.hpp"

namespace oved {

// 17-significant-digit decimal rendering ('.' decimal point, no locale).
std::string format_double(double v);

// Minimal RFC-4180-style CSV writer: ',' delimiter, '\n' records, plain
// numeric cells. Rows are rendered deterministically.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void add_row(const std::vector<double>& values);
  void add_row_raw(const std::vector<std::string>& cells);
  std::string str() const;
  void write(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::string> rows_;
};

// Plain-text influence-matrix file: '#'-prefixed header lines carrying the
// provenance (functional id, x, z, n, seed, coordinate labels), then the
// dimension and the matrix entries.
void write_influence_matrix(const InfluenceMatrix& m, const std::string& path);
InfluenceMatrix read_influence_matrix(const std::string& path);

// FNV-1a hash of a file's bytes, hex-encoded (used by run manifests).
std::string file_hash_hex(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace oved
