#include "fbsnet/report.hpp"

#include <string>

namespace fbsnet {

namespace {

std::vector<std::string> curve_cells(const CurvePoint& p) {
  return {std::to_string(p.epoch), format_double(p.train_objective),
          format_double(p.train_data_loss), format_double(p.val_data_loss)};
}

}  // namespace

CsvTable curve_table(const std::vector<CurvePoint>& curve) {
  CsvTable t;
  t.header = {"epoch", "train_objective", "train_data_loss", "val_data_loss"};
  for (const auto& p : curve) t.rows.push_back(curve_cells(p));
  return t;
}

CsvTable sweep_table(const SweepResult& result) {
  CsvTable t;
  t.header = {"N", "final_train_objective", "final_train_data_loss", "final_val_data_loss",
              "status"};
  for (const auto& r : result.rows) {
    t.rows.push_back({std::to_string(r.N), format_double(r.final_train_objective),
                      format_double(r.final_train_data_loss), format_double(r.final_val_data_loss),
                      r.ok ? "ok" : "failed"});
  }
  return t;
}

CsvTable sweep_curves_table(const SweepResult& result) {
  CsvTable t;
  t.header = {"N", "epoch", "train_objective", "train_data_loss", "val_data_loss"};
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    for (const auto& p : result.curves[i]) {
      auto cells = curve_cells(p);
      cells.insert(cells.begin(), std::to_string(result.rows[i].N));
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

CsvTable gamma_table(const GammaResult& result) {
  CsvTable t;
  t.header = {"N", "value", "gap"};
  for (const auto& r : result.rows) {
    t.rows.push_back({std::to_string(r.N), format_double(r.value), format_double(r.gap)});
  }
  return t;
}

CsvTable stability_table(const StabilityResult& result) {
  CsvTable t;
  t.header = {"r", "magnitude", "optimal_value_gap", "solution_distance_lp", "status"};
  for (const auto& r : result.rows) {
    t.rows.push_back({std::to_string(r.r), format_double(r.magnitude),
                      format_double(r.optimal_value_gap), format_double(r.solution_distance_lp),
                      r.ok ? "ok" : "failed"});
  }
  return t;
}

}  // namespace fbsnet
