#include "oved/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace oved {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvWriter::add_row(const std::vector<double>& values) {
  require(values.size() == header_.size(), "CsvWriter: cell count mismatch");
  std::string row;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) row += ',';
    row += format_double(values[i]);
  }
  rows_.push_back(std::move(row));
}

void CsvWriter::add_row_raw(const std::vector<std::string>& cells) {
  require(cells.size() == header_.size(), "CsvWriter: cell count mismatch");
  std::string row;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) row += ',';
    row += cells[i];
  }
  rows_.push_back(std::move(row));
}

std::string CsvWriter::str() const {
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i) out += ',';
    out += header_[i];
  }
  out += '\n';
  for (const auto& row : rows_) {
    out += row;
    out += '\n';
  }
  return out;
}

void CsvWriter::write(const std::string& path) const { write_text_file(path, str()); }

void write_influence_matrix(const InfluenceMatrix& m, const std::string& path) {
  std::ostringstream os;
  os << "# influence_matrix\n";
  os << "# functional: " << m.meta.functional_id << "\n";
  os << "# x:";
  for (Eigen::Index i = 0; i < m.meta.x.size(); ++i) os << ' ' << format_double(m.meta.x[i]);
  os << "\n# z:";
  for (Eigen::Index i = 0; i < m.meta.z.size(); ++i) os << ' ' << format_double(m.meta.z[i]);
  os << "\n# n: " << m.meta.n_samples << "\n";
  os << "# seed: " << m.meta.master_seed << ' ' << m.meta.stream_id << "\n";
  os << "# gradient: " << to_string(m.meta.gradient) << "\n";
  os << "# convergence_delta: " << format_double(m.meta.convergence_delta) << "\n";
  os << "# coords:";
  for (const auto& c : m.coords) os << ' ' << c;
  os << "\n" << m.dim() << "\n";
  for (Eigen::Index i = 0; i < m.dim(); ++i) {
    for (Eigen::Index j = 0; j < m.dim(); ++j) {
      if (j) os << ' ';
      os << format_double(m.m(i, j));
    }
    os << "\n";
  }
  write_text_file(path, os.str());
}

InfluenceMatrix read_influence_matrix(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "read_influence_matrix: cannot open " + path);
  InfluenceMatrix m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] != '#') break;
    std::istringstream ls(line.substr(1));
    std::string tag;
    ls >> tag;
    if (tag == "functional:") {
      ls >> m.meta.functional_id;
    } else if (tag == "x:") {
      std::vector<double> v;
      double d;
      while (ls >> d) v.push_back(d);
      m.meta.x = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    } else if (tag == "z:") {
      std::vector<double> v;
      double d;
      while (ls >> d) v.push_back(d);
      m.meta.z = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    } else if (tag == "n:") {
      ls >> m.meta.n_samples;
    } else if (tag == "seed:") {
      ls >> m.meta.master_seed >> m.meta.stream_id;
    } else if (tag == "convergence_delta:") {
      ls >> m.meta.convergence_delta;
    } else if (tag == "coords:") {
      std::string c;
      while (ls >> c) m.coords.push_back(c);
    }
  }
  int dim = 0;
  {
    std::istringstream ls(line);
    require(static_cast<bool>(ls >> dim) && dim > 0, "read_influence_matrix: bad dimension line");
  }
  m.m.resize(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      require(static_cast<bool>(in >> m.m(i, j)), "read_influence_matrix: truncated matrix data");
  return m;
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "file_hash_hex: cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "write_text_file: cannot open " + path);
  out << content;
  require(out.good(), "write_text_file: write failed for " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "read_text_file: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace oved
