#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ssmean/rng.hpp"

namespace ssmean {

// Labeled rows (outcome + p features) and unlabeled rows (p features).
// Construct through validate_dataset; the invariants (finite entries,
// matching widths, at least one row on each side) hold for every instance.
class Dataset {
 public:
  Dataset(Eigen::VectorXd labeled_outcomes, Eigen::MatrixXd labeled_features,
          Eigen::MatrixXd unlabeled_features);

  const Eigen::VectorXd& labeled_outcomes() const { return outcomes_; }
  const Eigen::MatrixXd& labeled_features() const { return labeled_; }
  const Eigen::MatrixXd& unlabeled_features() const { return unlabeled_; }

  std::size_t n() const { return static_cast<std::size_t>(outcomes_.size()); }
  std::size_t big_n() const { return static_cast<std::size_t>(unlabeled_.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(labeled_.cols()); }

 private:
  Eigen::VectorXd outcomes_;
  Eigen::MatrixXd labeled_;
  Eigen::MatrixXd unlabeled_;
};

// `labeled` holds the outcome in column 0 and features after it.
// Row/column numbers in error messages are 1-based.
Dataset validate_dataset(const Eigen::MatrixXd& labeled,
                         const Eigen::MatrixXd& unlabeled);

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m,
                            std::span<const std::size_t> rows);
Eigen::VectorXd select_rows(const Eigen::VectorXd& v,
                            std::span<const std::size_t> rows);

// K-way cross-fitting plan over labeled indices {0..n-1} and unlabeled
// indices {0..N-1}. train_sets[k] is the labeled complement of fold k.
struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::vector<std::size_t>> labeled_folds;
  std::vector<std::vector<std::size_t>> unlabeled_folds;
  std::vector<std::vector<std::size_t>> train_sets;
};

inline constexpr std::size_t kMinFoldSize = 3;

// Uniform random partition. When K does not divide a side, the remainder
// goes one index each to the lowest-numbered folds.
FoldPlan make_fold_plan(std::size_t n, std::size_t big_n, std::size_t k,
                        RngStream& rng);

// Uniform random permutation of {0..count-1} (Fisher-Yates).
std::vector<std::size_t> random_permutation(std::size_t count, RngStream& rng);

}  // namespace ssmean
