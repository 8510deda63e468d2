#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "systolic/config.hpp"
#include "systolic/trace.hpp"

namespace systolic {

/// Energy units per MAC, per SRAM byte read, per SRAM byte written and per
/// DRAM byte moved. The defaults are plausible relative weights, not a
/// calibrated technology model.
struct EnergyCostTable {
  double e_mac = 1.0;
  double e_sram_read = 6.0;
  double e_sram_write = 6.0;
  double e_dram_access = 200.0;

  bool operator==(const EnergyCostTable&) const = default;
};

/// Keys: MacEnergy, SramReadEnergy, SramWriteEnergy, DramEnergy. Missing
/// keys keep their defaults. Throws ConfigError on bad or negative values.
EnergyCostTable parse_energy_table(std::string_view text);
std::string serialize_energy_table(const EnergyCostTable& table);

struct EnergyCounts {
  std::int64_t macs = 0;
  std::int64_t sram_read_bytes = 0;
  std::int64_t sram_write_bytes = 0;
  std::int64_t dram_bytes = 0;
};

double energy(const EnergyCounts& counts, const EnergyCostTable& table);

/// One past the last OFMAP write. Throws SimulationError on an empty trace.
Cycle compute_runtime(const Trace& ofmap_writes);
Cycle compute_runtime(const TraceSet& traces);

// Everything a report needs that is observable in the five trace files.
struct TrafficSummary {
  Cycle total_cycles = 0;
  std::int64_t sram_reads_ifmap = 0;
  std::int64_t sram_reads_filter = 0;
  std::int64_t sram_writes_ofmap = 0;
  std::int64_t sram_reads_ofmap_partials = 0;
  std::int64_t dram_read_words = 0;
  std::int64_t dram_write_words = 0;
  std::int64_t peak_dram_read_words = 0;
  std::int64_t peak_dram_write_words = 0;
};

struct LayerReport {
  std::string name;
  Dataflow dataflow = Dataflow::output_stationary;
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  Cycle total_cycles = 0;
  std::int64_t macs_total = 0;
  std::int64_t occupied_pe_slots = 0;  // sum over folds of rows_used * cols_used
  std::int64_t fold_pe_slots = 0;      // folds * rows * cols
  double mapping_efficiency = 0.0;
  double compute_utilization = 0.0;
  std::int64_t sram_reads_ifmap = 0;
  std::int64_t sram_reads_filter = 0;
  std::int64_t sram_writes_ofmap = 0;
  std::int64_t sram_reads_ofmap_partials = 0;
  std::int64_t dram_read_bytes = 0;
  std::int64_t dram_write_bytes = 0;
  double avg_read_bw = 0.0;
  double peak_read_bw = 0.0;
  double avg_write_bw = 0.0;
  double peak_write_bw = 0.0;
  double energy = 0.0;
};

LayerReport make_layer_report(const LayerSpec& layer, const ArchConfig& arch, const TrafficSummary& traffic,
                              const EnergyCostTable& table);

struct NetworkReport {
  std::vector<LayerReport> layers;
  LayerReport total;
};

/// Serialized execution: cycles, counts and energy add up across layers.
/// Throws SimulationError on an empty list.
NetworkReport summarize_network(std::span<const LayerReport> layers);

inline constexpr std::string_view kSummaryHeader =
    "layer,dataflow,rows,cols,total_cycles,mapping_eff,compute_util,sram_rd_ifmap,sram_rd_filter,"
    "sram_wr_ofmap,dram_rd_bytes,dram_wr_bytes,avg_rd_bw,peak_rd_bw,avg_wr_bw,peak_wr_bw,energy";

void write_summary_csv(std::ostream& os, std::span<const LayerReport> layers);
/// Per-layer rows followed by one `total` row.
void write_network_csv(std::ostream& os, const NetworkReport& network);

/// Fixed six-decimal rendering used by every CSV writer.
std::string format_decimal(double value);

}  // namespace systolic
