#include "systolic/mapping.hpp"

#include <algorithm>

#include "systolic/errors.hpp"

namespace systolic {

WorkloadCounts workload_counts(const LayerSpec& layer) {
  validate(layer);
  WorkloadCounts c;
  c.ofmap_h = (layer.ifmap_h - layer.filter_h) / layer.stride + 1;
  c.ofmap_w = (layer.ifmap_w - layer.filter_w) / layer.stride + 1;
  if (c.ofmap_h < 1 || c.ofmap_w < 1) {
    throw TopologyError("layer '" + layer.name + "': OFMAP would be empty");
  }
  c.n_windows = c.ofmap_h * c.ofmap_w;
  c.window_size = layer.filter_h * layer.filter_w * layer.channels;
  c.n_filters = layer.num_filters;
  c.macs_total = c.n_windows * c.n_filters * c.window_size;
  return c;
}

FoldPlan fold_schedule(const WorkloadCounts& counts, const ArchConfig& arch) {
  std::int64_t row_extent = 0;
  std::int64_t col_extent = 0;
  std::int64_t stream = 0;
  switch (arch.dataflow) {
    case Dataflow::output_stationary:
      row_extent = counts.n_windows;
      col_extent = counts.n_filters;
      stream = counts.window_size;
      break;
    case Dataflow::weight_stationary:
      row_extent = counts.window_size;
      col_extent = counts.n_filters;
      stream = counts.n_windows;
      break;
    case Dataflow::input_stationary:
      row_extent = counts.window_size;
      col_extent = counts.n_windows;
      stream = counts.n_filters;
      break;
  }

  FoldPlan plan;
  plan.dataflow = arch.dataflow;
  plan.grid_rows = ceil_div(row_extent, arch.array_rows);
  plan.grid_cols = ceil_div(col_extent, arch.array_cols);
  plan.folds.reserve(static_cast<std::size_t>(plan.grid_rows * plan.grid_cols));
  for (std::int64_t i = 0; i < plan.grid_rows; ++i) {
    for (std::int64_t j = 0; j < plan.grid_cols; ++j) {
      Fold f;
      f.row_index = i;
      f.col_index = j;
      f.rows_used = std::min(arch.array_rows, row_extent - i * arch.array_rows);
      f.cols_used = std::min(arch.array_cols, col_extent - j * arch.array_cols);
      f.stream_len = stream;
      plan.folds.push_back(f);
    }
  }
  return plan;
}

std::int64_t occupied_pe_slots(const FoldPlan& plan) {
  std::int64_t sum = 0;
  for (const auto& f : plan.folds) sum += f.rows_used * f.cols_used;
  return sum;
}

double mapping_efficiency(const FoldPlan& plan, const ArchConfig& arch) {
  if (plan.folds.empty()) return 0.0;
  auto slots = static_cast<double>(plan.folds.size()) * static_cast<double>(arch.array_rows) *
               static_cast<double>(arch.array_cols);
  return static_cast<double>(occupied_pe_slots(plan)) / slots;
}

std::int64_t fold_span(const Fold& fold, Dataflow dataflow) {
  if (dataflow == Dataflow::output_stationary) {
    return fold.rows_used + fold.cols_used + fold.stream_len - 2;
  }
  // Stationary fill takes rows_used cycles before streaming starts.
  return 2 * fold.rows_used + fold.cols_used + fold.stream_len - 2;
}

std::int64_t fold_macs(const Fold& fold) {
  return fold.rows_used * fold.cols_used * fold.stream_len;
}

std::int64_t plan_cycles(const FoldPlan& plan) {
  std::int64_t total = 0;
  for (const auto& f : plan.folds) total += fold_span(f, plan.dataflow);
  return total;
}

}  // namespace systolic
