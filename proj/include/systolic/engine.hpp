#pragma once

#include "systolic/config.hpp"
#include "systolic/trace.hpp"

namespace systolic {

// Cycle-accurate SRAM traffic for one layer under the stall-free contract:
// edge operands are read exactly when the array consumes them, with a
// one-cycle skew per hop, and outputs leave the array the cycle they are
// produced. Folds run back to back starting at cycle 0.
//
// Output stationary, fold starting at `base` with rows_used x cols_used PEs
// and window size W:
//   row i reads window element k at          base + i + k
//   column j reads filter element k at       base + j + k
//   PE(i,j) writes its output at             base + i + j + W - 1
//
// Weight stationary (input stationary swaps filters and windows):
//   fill: at base + t every column reads the weight for row rows_used-1-t
//   row r reads window w's element at        base + rows_used + w + r
//   column j writes window w's sum at        base + rows_used + w + rows_used-1 + j
//   reduction folds after the first read back the partial sum at that cycle.

/// Streams the layer's traffic into `sink` using arch.dataflow.
void generate_traces(const LayerSpec& layer, const ArchConfig& arch, TraceSink& sink);

/// Collects the traffic into a TraceSet.
TraceSet generate_traces(const LayerSpec& layer, const ArchConfig& arch);

/// Dataflow-specific entry points. Throw SimulationError when
/// arch.dataflow does not match.
TraceSet gen_traces_os(const LayerSpec& layer, const ArchConfig& arch);
TraceSet gen_traces_ws(const LayerSpec& layer, const ArchConfig& arch);
TraceSet gen_traces_is(const LayerSpec& layer, const ArchConfig& arch);

}  // namespace systolic
