#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ssmean/dataset.hpp"

namespace ssmean {

// Shortest decimal that round-trips to the same double.
std::string format_double(double value);

// Writes to a sibling temporary file and renames it into place, so readers
// never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> header;
  // Row-major values; rows() x header.size().
  Eigen::MatrixXd values;
};

// Header row plus numeric rows; LF or CRLF line endings; ragged rows and
// non-numeric cells are parse errors citing the 1-based line number. "NaN"
// and "Inf" parse, so the validation layer can report them with their line.
CsvTable parse_csv(std::string_view text);

struct LabeledData {
  std::vector<std::string> feature_names;
  Eigen::VectorXd outcomes;
  Eigen::MatrixXd features;
};

struct UnlabeledData {
  std::vector<std::string> feature_names;
  Eigen::MatrixXd features;
};

// First column is the outcome, the rest are features.
LabeledData load_labeled_csv(const std::filesystem::path& path);
UnlabeledData load_unlabeled_csv(const std::filesystem::path& path);
LabeledData parse_labeled_csv(std::string_view text);
UnlabeledData parse_unlabeled_csv(std::string_view text);

// Throws kHeaderMismatch naming every position where the names differ.
void check_feature_names(const std::vector<std::string>& labeled,
                         const std::vector<std::string>& unlabeled);

Dataset load_dataset(const std::filesystem::path& labeled,
                     const std::filesystem::path& unlabeled);

}  // namespace ssmean
