#pragma once

#include <string>

#include "ssmean/nuisance.hpp"

namespace ssmean::detail {

// Every draw is the same function: constant/zero nuisances and the
// degenerate fits (exact-fit OLS, constant outcome).
class PointMassPosterior final : public NuisancePosterior {
 public:
  PointMassPosterior(NuisanceMethod method, RegressionDraw draw, std::string reason = {})
      : method_(method), draw_(std::move(draw)), reason_(std::move(reason)) {}

  NuisanceMethod method() const override { return method_; }
  std::size_t dimension() const override { return draw_.dimension(); }
  RegressionDraw sample(RngStream&) const override { return draw_; }
  RegressionDraw posterior_mean() const override { return draw_; }
  bool degenerate() const override { return true; }
  nlohmann::json metadata() const override;

 private:
  NuisanceMethod method_;
  RegressionDraw draw_;
  std::string reason_;
};

}  // namespace ssmean::detail
