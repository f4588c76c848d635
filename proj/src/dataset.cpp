#include "ssmean/dataset.hpp"

#include <cmath>
#include <string>

#include "ssmean/error.hpp"

namespace ssmean {
namespace {

void check_finite(const Eigen::MatrixXd& m, const char* side) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c))) {
        fail(ErrorKind::kValidation,
             std::string("non-finite value in ") + side + " data at row " +
                 std::to_string(r + 1) + ", column " + std::to_string(c + 1));
      }
    }
  }
}

}  // namespace

Dataset::Dataset(Eigen::VectorXd labeled_outcomes, Eigen::MatrixXd labeled_features,
                 Eigen::MatrixXd unlabeled_features)
    : outcomes_(std::move(labeled_outcomes)),
      labeled_(std::move(labeled_features)),
      unlabeled_(std::move(unlabeled_features)) {
  require(outcomes_.size() >= 1, ErrorKind::kValidation, "labeled data has no rows");
  require(unlabeled_.rows() >= 1, ErrorKind::kValidation,
          "unlabeled data has no rows");
  require(labeled_.rows() == outcomes_.size(), ErrorKind::kDimensionMismatch,
          "labeled outcomes and features differ in row count");
  require(labeled_.cols() == unlabeled_.cols(), ErrorKind::kDimensionMismatch,
          "labeled data has " + std::to_string(labeled_.cols()) +
              " feature columns but unlabeled data has " +
              std::to_string(unlabeled_.cols()));
  check_finite(outcomes_, "labeled");
  check_finite(labeled_, "labeled");
  check_finite(unlabeled_, "unlabeled");
}

Dataset validate_dataset(const Eigen::MatrixXd& labeled,
                         const Eigen::MatrixXd& unlabeled) {
  require(labeled.rows() >= 1 && labeled.cols() >= 1, ErrorKind::kValidation,
          "labeled data has no rows");
  require(unlabeled.rows() >= 1, ErrorKind::kValidation, "unlabeled data has no rows");
  require(unlabeled.cols() == labeled.cols() - 1, ErrorKind::kDimensionMismatch,
          "labeled data has " + std::to_string(labeled.cols() - 1) +
              " feature columns but unlabeled data has " +
              std::to_string(unlabeled.cols()));
  check_finite(labeled, "labeled");
  check_finite(unlabeled, "unlabeled");
  return Dataset(labeled.col(0), labeled.rightCols(labeled.cols() - 1), unlabeled);
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m,
                            std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

Eigen::VectorXd select_rows(const Eigen::VectorXd& v,
                            std::span<const std::size_t> rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

}  // namespace ssmean
