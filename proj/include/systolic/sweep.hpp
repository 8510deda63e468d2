#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <utility>
#include <span>
#include <string>
#include <vector>

#include "systolic/config.hpp"
#include "systolic/metrics.hpp"

namespace systolic {

struct Workload {
  std::string name;
  std::vector<LayerSpec> layers;
};

/// Reads a topology CSV; the workload is named after the file stem.
Workload load_workload(const std::filesystem::path& path);

enum class Study { dataflow_vs_size, memory_sweep, aspect_ratio, scale_up_vs_out };

Study parse_study(std::string_view name);
std::string_view to_string(Study study);

inline const std::vector<std::int64_t> kDefaultArraySizes{8, 16, 32, 64, 128};
inline const std::vector<std::int64_t> kDefaultSramLadderKb{32, 64, 128, 256, 512, 1024, 2048};
inline const std::vector<std::int64_t> kDefaultPeLadder{64, 256, 1024, 4096, 16384};
inline constexpr std::int64_t kDefaultTotalPes = 16384;
inline constexpr std::int64_t kScaleOutNodeSide = 8;

// Every study row starts with these keys. `layer` is "*" for whole-workload
// rows. Unused keys are 0 (numbers) or "-" (text).
struct CellKey {
  std::string workload;
  std::string layer = "*";
  std::string dataflow = "-";
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::int64_t sram_kb = 0;
  std::int64_t pe_count = 0;
  std::string mode = "-";
};

struct DataflowCell {
  CellKey key;
  std::string status = "ok";
  Cycle cycles = 0;
  std::int64_t macs = 0;
  double energy = 0.0;
};

struct MemoryCell {
  CellKey key;
  std::string status = "ok";
  Cycle cycles = 0;
  std::int64_t dram_read_bytes = 0;
  std::int64_t footprint_bytes = 0;
  double avg_read_bw = 0.0;     // DRAM read bytes / compute cycles
  double floor_read_bw = 0.0;   // footprint / compute cycles
  double steady_read_bw = 0.0;  // summed per-layer steady prefetch, max over layers
  std::int64_t peak_read_bytes = 0;
};

struct AspectCell {
  CellKey key;
  std::string status = "ok";
  Cycle cycles = 0;
};

struct ScaleCell {
  CellKey key;  // rows/cols of the scaled-up array; mode "up_vs_out"
  std::string status = "ok";
  std::int64_t nodes = 0;
  Cycle runtime_up = 0;
  Cycle runtime_out = 0;
  double runtime_ratio = 0.0;  // up / out
  std::int64_t macs_up = 0;
  std::int64_t macs_out = 0;
  double filter_bw_up = 0.0;   // DRAM filter read bytes / cycle
  double filter_bw_out = 0.0;  // summed over shards
  double filter_bw_ratio = 0.0;
  // Aggregate IFMAP + filter SRAM read bytes per cycle; for scale-out this is
  // what the unconstrained interconnect has to carry.
  double sram_read_bw_up = 0.0;
  double sram_read_bw_out = 0.0;
  std::int64_t skipped_layers = 0;
};

/// Runtime and energy of every (workload, square size, dataflow) triple.
/// `base` supplies SRAM sizes and offsets.
std::vector<DataflowCell> run_dataflow_study(std::span<const Workload> workloads,
                                             std::span<const std::int64_t> sizes, const ArchConfig& base,
                                             const EnergyCostTable& table, int jobs = 1);

/// DRAM read demand with IFMAP and filter buffers both set to each size.
std::vector<MemoryCell> run_memory_sweep(std::span<const Workload> workloads,
                                         std::span<const std::int64_t> sram_kb, const ArchConfig& base,
                                         std::span<const Dataflow> dataflows, int jobs = 1);

/// Power-of-two shapes rows x cols with rows * cols == total_pes and both
/// sides at least `min_side`, tallest-narrow last.
std::vector<std::pair<std::int64_t, std::int64_t>> aspect_shapes(std::int64_t total_pes,
                                                                 std::int64_t min_side = 8);

std::vector<AspectCell> run_aspect_ratio_study(std::span<const Workload> workloads, std::int64_t total_pes,
                                               const ArchConfig& base, int jobs = 1);

/// Splits num_filters into k near-equal shards, larger shards first.
/// Throws TopologyError when k exceeds the filter count.
std::vector<LayerSpec> partition_output_channels(const LayerSpec& layer, std::int64_t k);

/// Scale-up (one sqrt(P) x sqrt(P) array) against scale-out (P / 64 nodes of
/// 8x8, each with the full per-node SRAM, filters split across nodes).
/// Emits one per-layer row per (workload, rung, dataflow, layer) plus a
/// whole-workload row.
std::vector<ScaleCell> run_scale_study(std::span<const Workload> workloads, std::span<const std::int64_t> pe_ladder,
                                       const ArchConfig& base, std::span<const Dataflow> dataflows, int jobs = 1);

void write_study_csv(std::ostream& os, std::span<const DataflowCell> cells);
void write_study_csv(std::ostream& os, std::span<const MemoryCell> cells);
void write_study_csv(std::ostream& os, std::span<const AspectCell> cells);
void write_study_csv(std::ostream& os, std::span<const ScaleCell> cells);

}  // namespace systolic
