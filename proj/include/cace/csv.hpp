#pragma once

#include <string>
#include <vector>

#include "cace/population.hpp"

namespace cace {

// Raw CSV contents: header plus string cells, quotes already resolved.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  Eigen::Index column(const std::string& name) const;  // throws MissingColumn
};

CsvTable read_csv(const std::string& path);

struct ColumnRoles {
  std::string treatment_assigned;
  std::string treatment_received;
  std::string outcome;
  std::vector<std::string> covariates;
};

struct IngestResult {
  ObservedDataset data;
  // one name per expanded covariate column; categorical columns appear as
  // name=level with the lexicographically first level dropped
  std::vector<std::string> covariate_names;
};

// Builds the dataset.  Z and W must be 0/1; any missing (empty) cell in a
// role column rejects the row with its 1-based line number.  A covariate
// column with any non-numeric entry is treated as categorical and expanded
// to indicator columns.
IngestResult ingest_csv(const std::string& path, const ColumnRoles& roles);

// All-numeric covariate matrix from every column of the file.
Matrix read_covariate_matrix(const std::string& path, std::vector<std::string>* names = nullptr);

}  // namespace cace
