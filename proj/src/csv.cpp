#include "cace/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cace {

namespace {

std::vector<std::string> split_line(const std::string& line, long line_no) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  if (quoted)
    throw ParseError("line " + std::to_string(line_no) + ": unterminated quoted field");
  cells.push_back(cell);
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
  if (begin == end) return false;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

double numeric_cell(const CsvTable& table, std::size_t row, Eigen::Index col) {
  const std::string& s = table.rows[row][col];
  double v;
  if (!parse_double(s, v))
    throw ParseError("line " + std::to_string(row + 2) + ", column '" + table.header[col] +
                     "': cannot parse '" + s + "' as a number");
  return v;
}

int binary_cell(const CsvTable& table, std::size_t row, Eigen::Index col) {
  const double v = numeric_cell(table, row, col);
  if (v != 0.0 && v != 1.0)
    throw NonBinaryTreatment("line " + std::to_string(row + 2) + ", column '" +
                             table.header[col] + "': value must be 0 or 1");
  return static_cast<int>(v);
}

bool missing(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t'; });
}

}  // namespace

Eigen::Index CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return static_cast<Eigen::Index>(j);
  throw MissingColumn("column '" + name + "' not found in header");
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      table.header = split_line(line, line_no);
      continue;
    }
    if (line.empty()) continue;
    auto cells = split_line(line, line_no);
    if (cells.size() != table.header.size())
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(table.header.size()) + " fields, found " +
                       std::to_string(cells.size()));
    table.rows.push_back(std::move(cells));
  }
  if (table.header.empty()) throw ParseError("'" + path + "' has no header row");
  return table;
}

IngestResult ingest_csv(const std::string& path, const ColumnRoles& roles) {
  const CsvTable table = read_csv(path);
  std::vector<Eigen::Index> role_cols;
  const Eigen::Index zc = table.column(roles.treatment_assigned);
  const Eigen::Index wc = table.column(roles.treatment_received);
  const Eigen::Index yc = table.column(roles.outcome);
  role_cols = {zc, wc, yc};
  std::vector<Eigen::Index> xcols;
  for (const auto& name : roles.covariates) {
    xcols.push_back(table.column(name));
    role_cols.push_back(xcols.back());
  }

  {
    std::set<std::string> names{roles.treatment_assigned, roles.treatment_received,
                                roles.outcome};
    names.insert(roles.covariates.begin(), roles.covariates.end());
    if (names.size() != 3 + roles.covariates.size())
      throw ValidationError("role column names must be distinct");
  }

  for (std::size_t r = 0; r < table.rows.size(); ++r)
    for (Eigen::Index c : role_cols)
      if (missing(table.rows[r][c]))
        throw ParseError("line " + std::to_string(r + 2) + ": missing value in role column '" +
                         table.header[c] + "'");

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  if (n == 0) throw EmptyInput("'" + path + "' has no data rows");

  IngestResult out;
  out.data.z.resize(n);
  out.data.w_obs.resize(n);
  out.data.y_obs.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.data.z[i] = binary_cell(table, i, zc);
    out.data.w_obs[i] = binary_cell(table, i, wc);
    out.data.y_obs[i] = numeric_cell(table, i, yc);
  }

  // numeric covariates pass through; categorical ones become indicators for
  // every level except the lexicographically first
  std::vector<std::vector<double>> columns;
  for (std::size_t xi = 0; xi < xcols.size(); ++xi) {
    const Eigen::Index c = xcols[xi];
    bool numeric = true;
    for (Eigen::Index i = 0; i < n && numeric; ++i) {
      double v;
      numeric = parse_double(table.rows[i][c], v);
    }
    if (numeric) {
      std::vector<double> col(n);
      for (Eigen::Index i = 0; i < n; ++i) col[i] = numeric_cell(table, i, c);
      columns.push_back(std::move(col));
      out.covariate_names.push_back(table.header[c]);
    } else {
      std::set<std::string> levels;
      for (Eigen::Index i = 0; i < n; ++i) levels.insert(table.rows[i][c]);
      bool first = true;
      for (const auto& level : levels) {
        if (first) {
          first = false;
          continue;
        }
        std::vector<double> col(n);
        for (Eigen::Index i = 0; i < n; ++i)
          col[i] = table.rows[i][c] == level ? 1.0 : 0.0;
        columns.push_back(std::move(col));
        out.covariate_names.push_back(table.header[c] + "=" + level);
      }
    }
  }

  out.data.x.resize(n, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j)
    for (Eigen::Index i = 0; i < n; ++i) out.data.x(i, j) = columns[j][i];
  return out;
}

Matrix read_covariate_matrix(const std::string& path, std::vector<std::string>* names) {
  const CsvTable table = read_csv(path);
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto k = static_cast<Eigen::Index>(table.header.size());
  if (n == 0) throw EmptyInput("'" + path + "' has no data rows");
  Matrix x(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) x(i, j) = numeric_cell(table, i, j);
  if (names) *names = table.header;
  return x;
}

}  // namespace cace
