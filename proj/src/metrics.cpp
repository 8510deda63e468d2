#include "systolic/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "systolic/errors.hpp"
#include "systolic/mapping.hpp"

namespace systolic {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

void write_row(std::ostream& os, const LayerReport& r) {
  os << r.name << ',' << to_string(r.dataflow) << ',' << r.rows << ',' << r.cols << ',' << r.total_cycles << ','
     << format_decimal(r.mapping_efficiency) << ',' << format_decimal(r.compute_utilization) << ','
     << r.sram_reads_ifmap << ',' << r.sram_reads_filter << ',' << r.sram_writes_ofmap << ','
     << r.dram_read_bytes << ',' << r.dram_write_bytes << ',' << format_decimal(r.avg_read_bw) << ','
     << format_decimal(r.peak_read_bw) << ',' << format_decimal(r.avg_write_bw) << ','
     << format_decimal(r.peak_write_bw) << ',' << format_decimal(r.energy) << '\n';
}

}  // namespace

std::string format_decimal(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

EnergyCostTable parse_energy_table(std::string_view text) {
  EnergyCostTable t;
  int line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    auto line = trim(text.substr(0, nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#' || line.front() == ';' || line.front() == '[') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("energy table line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key(trim(line.substr(0, eq)));
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    auto value_text = trim(line.substr(eq + 1));
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
    if (ec != std::errc{} || ptr != value_text.data() + value_text.size() || value < 0.0) {
      throw ConfigError("energy table line " + std::to_string(line_no) + ": '" + std::string(value_text) +
                        "' is not a non-negative number");
    }
    if (key == "macenergy") t.e_mac = value;
    else if (key == "sramreadenergy") t.e_sram_read = value;
    else if (key == "sramwriteenergy") t.e_sram_write = value;
    else if (key == "dramenergy") t.e_dram_access = value;
    else throw ConfigError("energy table line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  return t;
}

std::string serialize_energy_table(const EnergyCostTable& t) {
  std::ostringstream os;
  os.precision(17);
  os << "MacEnergy = " << t.e_mac << "\nSramReadEnergy = " << t.e_sram_read
     << "\nSramWriteEnergy = " << t.e_sram_write << "\nDramEnergy = " << t.e_dram_access << "\n";
  return os.str();
}

double energy(const EnergyCounts& c, const EnergyCostTable& t) {
  return static_cast<double>(c.macs) * t.e_mac + static_cast<double>(c.sram_read_bytes) * t.e_sram_read +
         static_cast<double>(c.sram_write_bytes) * t.e_sram_write +
         static_cast<double>(c.dram_bytes) * t.e_dram_access;
}

Cycle compute_runtime(const Trace& ofmap_writes) {
  if (ofmap_writes.empty()) throw SimulationError("cannot compute runtime: OFMAP write trace is empty");
  return ofmap_writes.last_cycle() + 1;
}

Cycle compute_runtime(const TraceSet& traces) { return compute_runtime(traces.ofmap_writes); }

LayerReport make_layer_report(const LayerSpec& layer, const ArchConfig& arch, const TrafficSummary& traffic,
                              const EnergyCostTable& table) {
  const auto counts = workload_counts(layer);
  const auto plan = fold_schedule(counts, arch);
  const std::int64_t word = arch.word_bytes;

  LayerReport r;
  r.name = layer.name;
  r.dataflow = arch.dataflow;
  r.rows = arch.array_rows;
  r.cols = arch.array_cols;
  r.total_cycles = traffic.total_cycles;
  r.macs_total = counts.macs_total;
  r.occupied_pe_slots = occupied_pe_slots(plan);
  r.fold_pe_slots = static_cast<std::int64_t>(plan.folds.size()) * arch.array_rows * arch.array_cols;
  r.mapping_efficiency = mapping_efficiency(plan, arch);
  r.compute_utilization = static_cast<double>(r.macs_total) /
                          (static_cast<double>(r.total_cycles) * static_cast<double>(r.rows * r.cols));
  r.sram_reads_ifmap = traffic.sram_reads_ifmap;
  r.sram_reads_filter = traffic.sram_reads_filter;
  r.sram_writes_ofmap = traffic.sram_writes_ofmap;
  r.sram_reads_ofmap_partials = traffic.sram_reads_ofmap_partials;
  r.dram_read_bytes = traffic.dram_read_words * word;
  r.dram_write_bytes = traffic.dram_write_words * word;
  const auto cycles = static_cast<double>(r.total_cycles);
  r.avg_read_bw = static_cast<double>(r.dram_read_bytes) / cycles;
  r.avg_write_bw = static_cast<double>(r.dram_write_bytes) / cycles;
  r.peak_read_bw = static_cast<double>(traffic.peak_dram_read_words * word);
  r.peak_write_bw = static_cast<double>(traffic.peak_dram_write_words * word);

  EnergyCounts ec;
  ec.macs = r.macs_total;
  ec.sram_read_bytes = (r.sram_reads_ifmap + r.sram_reads_filter + r.sram_reads_ofmap_partials) * word;
  ec.sram_write_bytes = r.sram_writes_ofmap * word;
  ec.dram_bytes = r.dram_read_bytes + r.dram_write_bytes;
  r.energy = energy(ec, table);
  return r;
}

NetworkReport summarize_network(std::span<const LayerReport> layers) {
  if (layers.empty()) throw SimulationError("cannot summarize an empty network");
  NetworkReport n;
  n.layers.assign(layers.begin(), layers.end());
  LayerReport& t = n.total;
  t.name = "total";
  t.dataflow = layers.front().dataflow;
  t.rows = layers.front().rows;
  t.cols = layers.front().cols;
  double weighted_efficiency = 0.0;
  for (const auto& l : layers) {
    t.total_cycles += l.total_cycles;
    weighted_efficiency += l.mapping_efficiency * static_cast<double>(l.total_cycles);
    t.macs_total += l.macs_total;
    t.occupied_pe_slots += l.occupied_pe_slots;
    t.fold_pe_slots += l.fold_pe_slots;
    t.sram_reads_ifmap += l.sram_reads_ifmap;
    t.sram_reads_filter += l.sram_reads_filter;
    t.sram_writes_ofmap += l.sram_writes_ofmap;
    t.sram_reads_ofmap_partials += l.sram_reads_ofmap_partials;
    t.dram_read_bytes += l.dram_read_bytes;
    t.dram_write_bytes += l.dram_write_bytes;
    t.peak_read_bw = std::max(t.peak_read_bw, l.peak_read_bw);
    t.peak_write_bw = std::max(t.peak_write_bw, l.peak_write_bw);
    t.energy += l.energy;
  }
  const auto cycles = static_cast<double>(t.total_cycles);
  // cycle-weighted, so that the network keeps compute_util <= mapping_eff
  t.mapping_efficiency = weighted_efficiency / cycles;
  t.compute_utilization = static_cast<double>(t.macs_total) / (cycles * static_cast<double>(t.rows * t.cols));
  t.avg_read_bw = static_cast<double>(t.dram_read_bytes) / cycles;
  t.avg_write_bw = static_cast<double>(t.dram_write_bytes) / cycles;
  return n;
}

void write_summary_csv(std::ostream& os, std::span<const LayerReport> layers) {
  os << kSummaryHeader << '\n';
  for (const auto& l : layers) write_row(os, l);
}

void write_network_csv(std::ostream& os, const NetworkReport& network) {
  os << kSummaryHeader << '\n';
  for (const auto& l : network.layers) write_row(os, l);
  write_row(os, network.total);
}

}  // namespace systolic
