#pragma once

#include <vector>

#include "fbsnet/csv.hpp"
#include "fbsnet/experiments.hpp"
#include "fbsnet/learning.hpp"

namespace fbsnet {

// Result tables. Wall-clock times are kept out of the CSVs so that reruns
// are byte-identical; they go into the run manifest instead.

/// epoch,train_objective,train_data_loss,val_data_loss
CsvTable curve_table(const std::vector<CurvePoint>& curve);

/// N,final_train_objective,final_train_data_loss,final_val_data_loss,status
CsvTable sweep_table(const SweepResult& result);

/// N,epoch,train_objective,train_data_loss,val_data_loss
CsvTable sweep_curves_table(const SweepResult& result);

/// N,value,gap
CsvTable gamma_table(const GammaResult& result);

/// r,magnitude,optimal_value_gap,solution_distance_lp,status
CsvTable stability_table(const StabilityResult& result);

}  // namespace fbsnet
