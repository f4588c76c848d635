#include <algorithm>
#include <numeric>
#include <string>

#include "ssmean/dataset.hpp"
#include "ssmean/error.hpp"

namespace ssmean {
namespace {

std::vector<std::vector<std::size_t>> partition(std::size_t count, std::size_t k,
                                                RngStream& rng) {
  const auto order = random_permutation(count, rng);
  const std::size_t base = count / k;
  const std::size_t remainder = count % k;
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t next = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < remainder ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(next),
                    order.begin() + static_cast<std::ptrdiff_t>(next + size));
    next += size;
  }
  return folds;
}

}  // namespace

std::vector<std::size_t> random_permutation(std::size_t count, RngStream& rng) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = count; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

FoldPlan make_fold_plan(std::size_t n, std::size_t big_n, std::size_t k,
                        RngStream& rng) {
  require(k >= 2, ErrorKind::kInvalidParameter,
          "number of folds must be >= 2, got " + std::to_string(k));
  require(n / k >= kMinFoldSize, ErrorKind::kInsufficientData,
          "labeled side too small: floor(n/K) = " + std::to_string(n / k) +
              " < " + std::to_string(kMinFoldSize) + " (n = " + std::to_string(n) +
              ", K = " + std::to_string(k) + ")");
  require(big_n / k >= kMinFoldSize, ErrorKind::kInsufficientData,
          "unlabeled side too small: floor(N/K) = " + std::to_string(big_n / k) +
              " < " + std::to_string(kMinFoldSize) + " (N = " +
              std::to_string(big_n) + ", K = " + std::to_string(k) + ")");

  FoldPlan plan;
  plan.k = k;
  plan.labeled_folds = partition(n, k, rng);
  plan.unlabeled_folds = partition(big_n, k, rng);
  plan.train_sets.resize(k);
  for (std::size_t f = 0; f < k; ++f) {
    auto& train = plan.train_sets[f];
    train.reserve(n - plan.labeled_folds[f].size());
    for (std::size_t g = 0; g < k; ++g) {
      if (g == f) continue;
      train.insert(train.end(), plan.labeled_folds[g].begin(),
                   plan.labeled_folds[g].end());
    }
    std::sort(train.begin(), train.end());
  }
  return plan;
}

}  // namespace ssmean
