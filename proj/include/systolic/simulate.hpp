#pragma once

#include <optional>
#include <span>
#include <vector>

#include "systolic/config.hpp"
#include "systolic/memory.hpp"
#include "systolic/metrics.hpp"
#include "systolic/trace.hpp"

namespace systolic {

struct SimulationOptions {
  // Keep SRAM and DRAM traces in the result (needed to write trace files).
  bool retain_traces = false;
};

struct LayerResult {
  LayerReport report;
  TrafficSummary traffic;
  DramDemand dram;                // traces populated only when retained
  std::int64_t filter_dram_read_bytes = 0;
  std::optional<TraceSet> traces;
};

/// Runs the engine once and derives DRAM traffic and the layer report.
LayerResult simulate_layer(const LayerSpec& layer, const ArchConfig& arch, const EnergyCostTable& table,
                           const SimulationOptions& options = {});

/// Cycle count alone, from the fold plan; equals the engine's total_cycles.
Cycle layer_runtime(const LayerSpec& layer, const ArchConfig& arch);

/// Traffic summary observable from the SRAM and DRAM trace files. Partial
/// sum read-backs are recovered as OFMAP writes minus distinct addresses.
TrafficSummary summarize_traffic(const TraceSet& sram, const Trace& dram_read, const Trace& dram_write);

struct ReadCapacityPoint {
  std::int64_t sram_kb = 0;
  bool underflow = false;
  std::int64_t dram_read_bytes = 0;
  std::int64_t footprint_bytes = 0;  // distinct IFMAP + filter words touched
  double steady_read_bw = 0.0;
  std::int64_t peak_read_bytes = 0;
  Cycle total_cycles = 0;
};

/// DRAM read demand of one layer at several IFMAP/filter buffer sizes
/// (both partitions set to the same size), from a single engine pass.
std::vector<ReadCapacityPoint> sweep_read_capacity(const LayerSpec& layer, const ArchConfig& arch,
                                                   std::span<const std::int64_t> sram_kb);

}  // namespace systolic
