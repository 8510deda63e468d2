#include "systolic/sweep.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "systolic/errors.hpp"
#include "systolic/mapping.hpp"
#include "systolic/parallel.hpp"
#include "systolic/simulate.hpp"

namespace systolic {

namespace {

constexpr std::string_view kKeyHeader = "workload,layer,dataflow,rows,cols,sram_kb,pe_count,mode,status";

void write_key(std::ostream& os, const CellKey& k, const std::string& status) {
  os << k.workload << ',' << k.layer << ',' << k.dataflow << ',' << k.rows << ',' << k.cols << ',' << k.sram_kb
     << ',' << k.pe_count << ',' << k.mode << ',' << status;
}

ArchConfig with_array(const ArchConfig& base, std::int64_t rows, std::int64_t cols, Dataflow df) {
  ArchConfig a = base;
  a.array_rows = rows;
  a.array_cols = cols;
  a.dataflow = df;
  return a;
}

std::string error_status(const std::exception& e) {
  std::string msg = e.what();
  std::replace(msg.begin(), msg.end(), ',', ';');
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  return "error: " + msg;
}

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

std::int64_t sram_read_bytes(const LayerResult& r, const ArchConfig& arch) {
  return (r.traffic.sram_reads_ifmap + r.traffic.sram_reads_filter) * arch.word_bytes;
}

// Simulates each distinct (layer shape, architecture) pair once. Layer names
// are ignored, so repeated blocks in a network cost one simulation.
template <typename Result>
class Dedup {
 public:
  std::size_t request(const LayerSpec& layer, const ArchConfig& arch) {
    const Key key{layer.ifmap_h,     layer.ifmap_w,        layer.filter_h,     layer.filter_w,
                  layer.channels,    layer.num_filters,    layer.stride,       arch.array_rows,
                  arch.array_cols,   static_cast<std::int64_t>(arch.dataflow), arch.ifmap_sram_kb,
                  arch.filter_sram_kb, arch.ofmap_sram_kb, arch.word_bytes};
    auto [it, inserted] = index_.emplace(key, work_.size());
    if (inserted) work_.push_back({layer, arch});
    return it->second;
  }

  template <typename Fn>
  void run(int jobs, Fn&& fn) {
    results_.resize(work_.size());
    errors_.resize(work_.size());
    parallel_for(work_.size(), jobs, [&](std::size_t i) {
      try {
        results_[i] = fn(work_[i].first, work_[i].second);
      } catch (const Error& e) {
        errors_[i] = error_status(e);
      }
    });
  }

  const Result& result(std::size_t i) const { return results_[i]; }
  const std::string& error(std::size_t i) const { return errors_[i]; }

 private:
  using Key = std::array<std::int64_t, 14>;
  std::map<Key, std::size_t> index_;
  std::vector<std::pair<LayerSpec, ArchConfig>> work_;
  std::vector<Result> results_;
  std::vector<std::string> errors_;
};

}  // namespace

Workload load_workload(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open topology '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return Workload{path.stem().string(), parse_topology(ss.str())};
}

Study parse_study(std::string_view name) {
  if (name == "dataflow") return Study::dataflow_vs_size;
  if (name == "memory") return Study::memory_sweep;
  if (name == "aspect") return Study::aspect_ratio;
  if (name == "scale") return Study::scale_up_vs_out;
  throw ConfigError("unknown study '" + std::string(name) + "': expected dataflow, memory, aspect or scale");
}

std::string_view to_string(Study study) {
  switch (study) {
    case Study::dataflow_vs_size: return "dataflow";
    case Study::memory_sweep: return "memory";
    case Study::aspect_ratio: return "aspect";
    case Study::scale_up_vs_out: return "scale";
  }
  return "?";
}

std::vector<DataflowCell> run_dataflow_study(std::span<const Workload> workloads,
                                             std::span<const std::int64_t> sizes, const ArchConfig& base,
                                             const EnergyCostTable& table, int jobs) {
  std::vector<DataflowCell> cells;
  std::vector<std::pair<std::size_t, std::size_t>> tasks;  // (cell, simulation)
  Dedup<LayerReport> sims;
  for (const auto& w : workloads) {
    for (auto size : sizes) {
      for (auto df : kAllDataflows) {
        DataflowCell c;
        c.key.workload = w.name;
        c.key.dataflow = std::string(to_string(df));
        c.key.rows = c.key.cols = size;
        c.key.pe_count = size * size;
        c.key.sram_kb = base.ifmap_sram_kb;
        const auto arch = with_array(base, size, size, df);
        for (const auto& l : w.layers) tasks.emplace_back(cells.size(), sims.request(l, arch));
        cells.push_back(std::move(c));
      }
    }
  }
  sims.run(jobs, [&](const LayerSpec& l, const ArchConfig& a) { return simulate_layer(l, a, table).report; });
  for (auto [cell, sim] : tasks) {
    auto& c = cells[cell];
    if (!sims.error(sim).empty()) {
      if (c.status == "ok") c.status = sims.error(sim);
      continue;
    }
    const auto& r = sims.result(sim);
    c.cycles += r.total_cycles;
    c.macs += r.macs_total;
    c.energy += r.energy;
  }
  return cells;
}

std::vector<MemoryCell> run_memory_sweep(std::span<const Workload> workloads, std::span<const std::int64_t> sram_kb,
                                         const ArchConfig& base, std::span<const Dataflow> dataflows, int jobs) {
  std::vector<MemoryCell> cells;
  std::vector<std::pair<std::size_t, std::size_t>> tasks;  // (first cell of the ladder, simulation)
  Dedup<std::vector<ReadCapacityPoint>> sims;
  for (const auto& w : workloads) {
    for (auto df : dataflows) {
      const std::size_t first = cells.size();
      for (auto kb : sram_kb) {
        MemoryCell c;
        c.key.workload = w.name;
        c.key.dataflow = std::string(to_string(df));
        c.key.rows = base.array_rows;
        c.key.cols = base.array_cols;
        c.key.sram_kb = kb;
        c.key.pe_count = base.array_rows * base.array_cols;
        cells.push_back(std::move(c));
      }
      ArchConfig arch = base;
      arch.dataflow = df;
      for (const auto& l : w.layers) tasks.emplace_back(first, sims.request(l, arch));
    }
  }
  sims.run(jobs, [&](const LayerSpec& l, const ArchConfig& a) { return sweep_read_capacity(l, a, sram_kb); });
  for (auto [first, sim] : tasks) {
    for (std::size_t s = 0; s < sram_kb.size(); ++s) {
      auto& c = cells[first + s];
      if (!sims.error(sim).empty()) {
        if (c.status == "ok") c.status = sims.error(sim);
        continue;
      }
      const auto& p = sims.result(sim)[s];
      if (p.underflow) {
        c.status = "underflow";
        continue;
      }
      c.cycles += p.total_cycles;
      c.dram_read_bytes += p.dram_read_bytes;
      c.footprint_bytes += p.footprint_bytes;
      c.steady_read_bw = std::max(c.steady_read_bw, p.steady_read_bw);
      c.peak_read_bytes = std::max(c.peak_read_bytes, p.peak_read_bytes);
    }
  }
  for (auto& c : cells) {
    if (c.status != "ok") continue;
    c.avg_read_bw = ratio(static_cast<double>(c.dram_read_bytes), static_cast<double>(c.cycles));
    c.floor_read_bw = ratio(static_cast<double>(c.footprint_bytes), static_cast<double>(c.cycles));
  }
  return cells;
}

std::vector<std::pair<std::int64_t, std::int64_t>> aspect_shapes(std::int64_t total_pes, std::int64_t min_side) {
  std::vector<std::pair<std::int64_t, std::int64_t>> shapes;
  for (std::int64_t rows = 1; rows <= total_pes; rows *= 2) {
    if (total_pes % rows != 0) continue;
    const std::int64_t cols = total_pes / rows;
    if (rows >= min_side && cols >= min_side) shapes.emplace_back(rows, cols);
  }
  return shapes;
}

std::vector<AspectCell> run_aspect_ratio_study(std::span<const Workload> workloads, std::int64_t total_pes,
                                               const ArchConfig& base, int jobs) {
  std::vector<AspectCell> cells;
  for (const auto& w : workloads) {
    for (auto df : kAllDataflows) {
      for (auto [rows, cols] : aspect_shapes(total_pes)) {
        AspectCell c;
        c.key.workload = w.name;
        c.key.dataflow = std::string(to_string(df));
        c.key.rows = rows;
        c.key.cols = cols;
        c.key.pe_count = rows * cols;
        c.key.sram_kb = base.ifmap_sram_kb;
        cells.push_back(std::move(c));
      }
    }
  }
  std::size_t idx = 0;
  std::vector<const Workload*> owner(cells.size());
  for (const auto& w : workloads) {
    for (std::size_t n = 0; n < std::size(kAllDataflows) * aspect_shapes(total_pes).size(); ++n) owner[idx++] = &w;
  }
  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    auto& c = cells[i];
    try {
      auto arch = with_array(base, c.key.rows, c.key.cols, parse_dataflow(c.key.dataflow));
      for (const auto& l : owner[i]->layers) c.cycles += layer_runtime(l, arch);
    } catch (const Error& e) {
      c.status = error_status(e);
    }
  });
  return cells;
}

std::vector<LayerSpec> partition_output_channels(const LayerSpec& layer, std::int64_t k) {
  if (k < 1) throw TopologyError("partition count must be positive");
  if (k > layer.num_filters) {
    throw TopologyError("layer '" + layer.name + "': cannot split " + std::to_string(layer.num_filters) +
                        " filters across " + std::to_string(k) + " nodes");
  }
  std::vector<LayerSpec> shards;
  const std::int64_t q = layer.num_filters / k;
  const std::int64_t extra = layer.num_filters % k;
  for (std::int64_t i = 0; i < k; ++i) {
    LayerSpec s = layer;
    s.num_filters = q + (i < extra ? 1 : 0);
    if (k > 1) s.name = layer.name + "_shard" + std::to_string(i);
    shards.push_back(std::move(s));
  }
  return shards;
}

std::vector<ScaleCell> run_scale_study(std::span<const Workload> workloads, std::span<const std::int64_t> pe_ladder,
                                       const ArchConfig& base, std::span<const Dataflow> dataflows, int jobs) {
  const std::int64_t node_pes = kScaleOutNodeSide * kScaleOutNodeSide;
  for (auto pes : pe_ladder) {
    const auto side = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(pes))));
    if (side * side != pes || pes % node_pes != 0) {
      throw ConfigError("PE count " + std::to_string(pes) + " must be a square multiple of " +
                        std::to_string(node_pes));
    }
  }

  struct Run {
    Cycle cycles = 0;
    std::int64_t macs = 0;
    std::int64_t filter_dram_bytes = 0;
    std::int64_t sram_read_bytes = 0;
  };
  struct Task {
    std::size_t cell;
    std::size_t up;
    std::vector<std::size_t> shards;  // empty when the layer cannot be split
  };
  Dedup<Run> sims;
  std::vector<ScaleCell> cells;
  std::vector<std::size_t> total_row;  // index of the workload row each layer row belongs to
  std::vector<Task> tasks;
  for (const auto& w : workloads) {
    for (auto df : dataflows) {
      for (auto pes : pe_ladder) {
        const auto side = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(pes))));
        ScaleCell proto;
        proto.key.workload = w.name;
        proto.key.dataflow = std::string(to_string(df));
        proto.key.rows = proto.key.cols = side;
        proto.key.pe_count = pes;
        proto.key.sram_kb = base.ifmap_sram_kb;
        proto.key.mode = "up_vs_out";
        proto.nodes = pes / node_pes;
        const std::size_t workload_row = cells.size();
        cells.push_back(proto);
        total_row.push_back(workload_row);
        const auto up_arch = with_array(base, side, side, df);
        const auto node_arch = with_array(base, kScaleOutNodeSide, kScaleOutNodeSide, df);
        for (const auto& l : w.layers) {
          ScaleCell c = proto;
          c.key.layer = l.name;
          Task t{cells.size(), sims.request(l, up_arch), {}};
          if (proto.nodes <= l.num_filters) {
            for (const auto& shard : partition_output_channels(l, proto.nodes)) {
              t.shards.push_back(sims.request(shard, node_arch));
            }
          }
          tasks.push_back(std::move(t));
          cells.push_back(std::move(c));
          total_row.push_back(workload_row);
        }
      }
    }
  }

  const EnergyCostTable table;
  sims.run(jobs, [&](const LayerSpec& l, const ArchConfig& a) {
    const auto r = simulate_layer(l, a, table);
    return Run{r.report.total_cycles, r.report.macs_total, r.filter_dram_read_bytes, sram_read_bytes(r, a)};
  });
  auto per_cycle = [](std::int64_t bytes, Cycle cycles) {
    return ratio(static_cast<double>(bytes), static_cast<double>(cycles));
  };
  for (const auto& t : tasks) {
    auto& c = cells[t.cell];
    std::string error = sims.error(t.up);
    for (auto s : t.shards) {
      if (error.empty()) error = sims.error(s);
    }
    if (!error.empty()) {
      c.status = error;
      c.skipped_layers = 1;
      continue;
    }
    const auto& up = sims.result(t.up);
    c.runtime_up = up.cycles;
    c.macs_up = up.macs;
    c.filter_bw_up = per_cycle(up.filter_dram_bytes, up.cycles);
    c.sram_read_bw_up = per_cycle(up.sram_read_bytes, up.cycles);
    if (t.shards.empty()) {
      c.status = "shard_error";
      c.skipped_layers = 1;
      continue;
    }
    for (auto s : t.shards) {
      const auto& r = sims.result(s);
      c.runtime_out = std::max(c.runtime_out, r.cycles);
      c.macs_out += r.macs;
      c.filter_bw_out += per_cycle(r.filter_dram_bytes, r.cycles);
      c.sram_read_bw_out += per_cycle(r.sram_read_bytes, r.cycles);
    }
    c.runtime_ratio = ratio(static_cast<double>(c.runtime_up), static_cast<double>(c.runtime_out));
    c.filter_bw_ratio = ratio(c.filter_bw_up, c.filter_bw_out);
  }

  // Whole-workload rows aggregate the layers that ran in both modes.
  std::vector<double> filter_bytes_up(cells.size(), 0.0), filter_bytes_out(cells.size(), 0.0);
  std::vector<double> sram_bytes_up(cells.size(), 0.0), sram_bytes_out(cells.size(), 0.0);
  std::vector<std::int64_t> layer_count(cells.size(), 0);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].key.layer == "*") continue;
    auto& total = cells[total_row[i]];
    const auto& c = cells[i];
    ++layer_count[total_row[i]];
    if (c.status != "ok") {
      total.skipped_layers += 1;
      continue;
    }
    total.runtime_up += c.runtime_up;
    total.runtime_out += c.runtime_out;
    total.macs_up += c.macs_up;
    total.macs_out += c.macs_out;
    filter_bytes_up[total_row[i]] += c.filter_bw_up * static_cast<double>(c.runtime_up);
    filter_bytes_out[total_row[i]] += c.filter_bw_out * static_cast<double>(c.runtime_out);
    sram_bytes_up[total_row[i]] += c.sram_read_bw_up * static_cast<double>(c.runtime_up);
    sram_bytes_out[total_row[i]] += c.sram_read_bw_out * static_cast<double>(c.runtime_out);
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto& c = cells[i];
    if (c.key.layer != "*") continue;
    if (c.skipped_layers == layer_count[i]) {
      c.status = "no_valid_layers";
      continue;
    }
    if (c.skipped_layers > 0) c.status = "partial";
    c.runtime_ratio = ratio(static_cast<double>(c.runtime_up), static_cast<double>(c.runtime_out));
    c.filter_bw_up = ratio(filter_bytes_up[i], static_cast<double>(c.runtime_up));
    c.filter_bw_out = ratio(filter_bytes_out[i], static_cast<double>(c.runtime_out));
    c.filter_bw_ratio = ratio(c.filter_bw_up, c.filter_bw_out);
    c.sram_read_bw_up = ratio(sram_bytes_up[i], static_cast<double>(c.runtime_up));
    c.sram_read_bw_out = ratio(sram_bytes_out[i], static_cast<double>(c.runtime_out));
  }
  return cells;
}

void write_study_csv(std::ostream& os, std::span<const DataflowCell> cells) {
  os << kKeyHeader << ",cycles,macs,energy\n";
  for (const auto& c : cells) {
    write_key(os, c.key, c.status);
    os << ',' << c.cycles << ',' << c.macs << ',' << format_decimal(c.energy) << '\n';
  }
}

void write_study_csv(std::ostream& os, std::span<const MemoryCell> cells) {
  os << kKeyHeader << ",cycles,dram_rd_bytes,footprint_bytes,avg_rd_bw,floor_rd_bw,steady_rd_bw,peak_rd_bw\n";
  for (const auto& c : cells) {
    write_key(os, c.key, c.status);
    os << ',' << c.cycles << ',' << c.dram_read_bytes << ',' << c.footprint_bytes << ','
       << format_decimal(c.avg_read_bw) << ',' << format_decimal(c.floor_read_bw) << ','
       << format_decimal(c.steady_read_bw) << ',' << c.peak_read_bytes << '\n';
  }
}

void write_study_csv(std::ostream& os, std::span<const AspectCell> cells) {
  os << kKeyHeader << ",cycles\n";
  for (const auto& c : cells) {
    write_key(os, c.key, c.status);
    os << ',' << c.cycles << '\n';
  }
}

void write_study_csv(std::ostream& os, std::span<const ScaleCell> cells) {
  os << kKeyHeader
     << ",nodes,runtime_up,runtime_out,runtime_ratio,macs_up,macs_out,filter_bw_up,filter_bw_out,filter_bw_ratio,"
        "sram_rd_bw_up,sram_rd_bw_out,skipped_layers\n";
  for (const auto& c : cells) {
    write_key(os, c.key, c.status);
    os << ',' << c.nodes << ',' << c.runtime_up << ',' << c.runtime_out << ',' << format_decimal(c.runtime_ratio)
       << ',' << c.macs_up << ',' << c.macs_out << ',' << format_decimal(c.filter_bw_up) << ','
       << format_decimal(c.filter_bw_out) << ',' << format_decimal(c.filter_bw_ratio) << ','
       << format_decimal(c.sram_read_bw_up) << ',' << format_decimal(c.sram_read_bw_out) << ',' << c.skipped_layers
       << '\n';
  }
}

}  // namespace systolic
