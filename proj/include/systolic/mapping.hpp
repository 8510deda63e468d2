#pragma once

#include <cstdint>
#include <vector>

#include "systolic/config.hpp"

namespace systolic {

struct WorkloadCounts {
  std::int64_t ofmap_h = 0;
  std::int64_t ofmap_w = 0;
  std::int64_t n_windows = 0;    // output pixels per filter
  std::int64_t window_size = 0;  // filter_h * filter_w * channels
  std::int64_t n_filters = 0;
  std::int64_t macs_total = 0;

  bool operator==(const WorkloadCounts&) const = default;
};

WorkloadCounts workload_counts(const LayerSpec& layer);

// One time-multiplexed mapping round. `row_index`/`col_index` locate the fold
// in the fold grid; the work it covers starts at row_index * array_rows along
// the row dimension and col_index * array_cols along the column dimension.
//
//   dataflow  array rows hold     array columns hold   streamed per fold
//   OS        windows             filters              window elements
//   WS        reduction elements  filters              windows
//   IS        reduction elements  windows              filters
struct Fold {
  std::int64_t row_index = 0;
  std::int64_t col_index = 0;
  std::int64_t rows_used = 0;
  std::int64_t cols_used = 0;
  std::int64_t stream_len = 0;
};

struct FoldPlan {
  Dataflow dataflow = Dataflow::output_stationary;
  std::int64_t grid_rows = 0;
  std::int64_t grid_cols = 0;
  std::vector<Fold> folds;  // row-major over the grid, executed serially
};

FoldPlan fold_schedule(const WorkloadCounts& counts, const ArchConfig& arch);

/// Fraction of PE slots occupied, averaged over folds.
double mapping_efficiency(const FoldPlan& plan, const ArchConfig& arch);

/// Sum of rows_used * cols_used over all folds.
std::int64_t occupied_pe_slots(const FoldPlan& plan);

/// Cycles from the first edge read of a fold to one past its last output.
std::int64_t fold_span(const Fold& fold, Dataflow dataflow);

std::int64_t fold_macs(const Fold& fold);

/// Serial execution time of the whole plan, without generating traces.
std::int64_t plan_cycles(const FoldPlan& plan);

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

}  // namespace systolic
