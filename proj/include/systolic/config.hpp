#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace systolic {

using Address = std::uint64_t;
using Cycle = std::int64_t;

enum class Dataflow { output_stationary, weight_stationary, input_stationary };

inline constexpr Dataflow kAllDataflows[] = {Dataflow::output_stationary,
                                             Dataflow::weight_stationary,
                                             Dataflow::input_stationary};

/// Short lowercase tag used in config files and reports: "os", "ws", "is".
std::string_view to_string(Dataflow dataflow);

/// Accepts "os", "ws", "is" in any case. Throws ConfigError otherwise.
Dataflow parse_dataflow(std::string_view text);

struct ArchConfig {
  std::int64_t array_rows = 0;
  std::int64_t array_cols = 0;
  // Size of ONE working-set buffer per partition; the idle half of the
  // double buffer is not included.
  std::int64_t ifmap_sram_kb = 0;
  std::int64_t filter_sram_kb = 0;
  std::int64_t ofmap_sram_kb = 0;
  Address ifmap_offset = 0;
  Address filter_offset = 0;
  Address ofmap_offset = 0;
  Dataflow dataflow = Dataflow::output_stationary;
  std::int64_t word_bytes = 1;
  std::string topology_path;

  std::int64_t ifmap_capacity_bytes() const { return ifmap_sram_kb * 1024; }
  std::int64_t filter_capacity_bytes() const { return filter_sram_kb * 1024; }
  std::int64_t ofmap_capacity_bytes() const { return ofmap_sram_kb * 1024; }

  bool operator==(const ArchConfig&) const = default;
};

/// Throws ConfigError when a field is out of range.
void validate(const ArchConfig& config);

struct ParsedConfig {
  ArchConfig config;
  std::vector<std::string> warnings;
};

/// Parses an INI-style file: `[section]` headers and `Key = value` lines.
/// Section names are informational; keys are looked up globally.
/// `#` and `;` start comments.
ParsedConfig parse_config(std::string_view text);

std::string serialize_config(const ArchConfig& config);

struct LayerSpec {
  std::string name;
  std::int64_t ifmap_h = 0;
  std::int64_t ifmap_w = 0;
  std::int64_t filter_h = 0;
  std::int64_t filter_w = 0;
  std::int64_t channels = 0;
  std::int64_t num_filters = 0;
  std::int64_t stride = 1;

  bool operator==(const LayerSpec&) const = default;
};

/// Throws TopologyError when dimensions are non-positive or the filter does
/// not fit inside the IFMAP.
void validate(const LayerSpec& layer);

/// One LayerSpec per data row, in file order. The first non-empty line is
/// the header. A trailing comma on a row is tolerated.
std::vector<LayerSpec> parse_topology(std::string_view text);

std::string serialize_topology(std::span<const LayerSpec> layers);

/// Lowers an (m x k) * (k x n) product onto a 1x1 convolution with m windows
/// of length k against n filters. Matrix-vector and vector-vector products
/// are the m == 1 and/or n == 1 cases.
LayerSpec lower_gemm(std::int64_t m, std::int64_t k, std::int64_t n,
                     std::string name = "gemm");

}  // namespace systolic
