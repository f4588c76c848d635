#include "ssmean/cli.hpp"

namespace ssmean {

using nlohmann::json;

json t_component_json(const TComponent& t) {
  return {{"df", t.df}, {"location", t.location}, {"scale_sq", t.scale_sq}};
}

json result_json(const EstimationResult& result) {
  json folds = json::array();
  for (const auto& f : result.folds) {
    folds.push_back({{"fold", f.fold_id},
                     {"n_k", f.labeled_size},
                     {"N_k", f.unlabeled_size},
                     {"center", f.posterior.center()},
                     {"t_bias", t_component_json(f.posterior.t_bias)},
                     {"t_imputed", t_component_json(f.posterior.t_imputed)},
                     {"nuisance", f.nuisance}});
  }
  return {{"method", to_string(result.method)},
          {"nuisance", result.method == EstimatorKind::kSupervised
                           ? json(nullptr)
                           : json(result.nuisance)},
          {"point", result.point_estimate},
          {"ci", {result.ci.first, result.ci.second}},
          {"length", result.ci_length()},
          {"alpha", result.alpha},
          {"M", result.draws.size()},
          {"draw_mean", result.draw_mean()},
          {"draw_sd", result.draw_sd()},
          {"folds", folds},
          {"nuisance_metadata", result.nuisance_metadata}};
}

json data_summary_json(const Dataset& data) {
  json out = {{"n", data.n()}, {"N", data.big_n()}, {"p", data.p()}};
  // Unlabeled data that is not larger than the labeled set leaves little to
  // gain; the run proceeds but says so.
  out["unlabeled_not_larger"] = data.big_n() <= data.n();
  return out;
}

std::string dump_report(const json& report) { return report.dump(2) + "\n"; }

}  // namespace ssmean
