#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace gcmm {

// Fully observed rows: one observation per row, one dimension per column.
struct SyncDataset {
  Eigen::MatrixXd values;  // N x D
  std::vector<std::string> dimension_names;

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index d() const { return values.cols(); }

  // N >= 2, D >= 1, finite entries, names match the column count.
  void validate() const;
};

// Per-dimension observations with no cross-dimension pairing. Pool i may
// be empty.
struct UnsyncDataset {
  std::vector<std::vector<double>> per_dimension;

  // Exactly d pools, all entries finite.
  void validate(Eigen::Index d) const;
};

// Comma-separated file with one header row naming the dimensions and one
// decimal-point real per field. Row and column indices in error messages
// are 1-based over the data body.
SyncDataset load_sync_csv(const std::string& path);

// Single-column variant used for unsynchronized pools; the body may be
// empty.
std::vector<double> load_unsync_csv(const std::string& path);

// Reads <name>.csv from dir for each dimension name. A missing file
// leaves that dimension's pool empty.
UnsyncDataset load_unsync_dir(const std::string& dir,
                              const std::vector<std::string>& dimension_names);

void save_sync_csv(const SyncDataset& data, const std::string& path);

}  // namespace gcmm
