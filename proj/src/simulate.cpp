#include "systolic/simulate.hpp"

#include <algorithm>
#include <memory>

#include "systolic/engine.hpp"
#include "systolic/errors.hpp"
#include "systolic/layout.hpp"
#include "systolic/mapping.hpp"

namespace systolic {

namespace {

class CountingSink : public TraceSink {
 public:
  void on_event(Stream stream, Cycle, std::span<const Address> addresses) override {
    counts_[static_cast<int>(stream)] += static_cast<std::int64_t>(addresses.size());
  }
  std::int64_t count(Stream s) const { return counts_[static_cast<int>(s)]; }

 private:
  std::int64_t counts_[4] = {0, 0, 0, 0};
};

// Feeds the IFMAP and filter read streams to one epochizer each.
class EpochSink : public TraceSink {
 public:
  EpochSink(Epochizer* ifmap, Epochizer* filter) : ifmap_(ifmap), filter_(filter) {}
  void on_event(Stream stream, Cycle cycle, std::span<const Address> addresses) override {
    if (stream == Stream::ifmap_read) ifmap_->feed(cycle, addresses);
    else if (stream == Stream::filter_read) filter_->feed(cycle, addresses);
  }

 private:
  Epochizer* ifmap_;
  Epochizer* filter_;
};

class WriteCollector : public TraceSink {
 public:
  void on_event(Stream stream, Cycle cycle, std::span<const Address> addresses) override {
    if (stream == Stream::ofmap_write) writes.append(cycle, addresses);
  }
  Trace writes;
};

std::int64_t distinct_count(const Trace& t) {
  std::vector<Address> all(t.all_addresses().begin(), t.all_addresses().end());
  std::sort(all.begin(), all.end());
  return static_cast<std::int64_t>(std::unique(all.begin(), all.end()) - all.begin());
}

}  // namespace

LayerResult simulate_layer(const LayerSpec& layer, const ArchConfig& arch, const EnergyCostTable& table,
                           const SimulationOptions& options) {
  OperandLayout layout(layer, arch);
  layout.check_regions();
  const bool keep = options.retain_traces;
  Epochizer ifmap_epochs(arch.ifmap_capacity_bytes(), arch.word_bytes, arch.ifmap_offset,
                         arch.ifmap_offset + static_cast<Address>(layout.ifmap_bytes()), keep);
  Epochizer filter_epochs(arch.filter_capacity_bytes(), arch.word_bytes, arch.filter_offset,
                          arch.filter_offset + static_cast<Address>(layout.filter_bytes()), keep);
  CountingSink counter;
  EpochSink epoch_sink(&ifmap_epochs, &filter_epochs);
  WriteCollector writes;
  TraceCollector collector;
  std::vector<TraceSink*> sinks{&counter, &epoch_sink};
  if (keep) sinks.push_back(&collector);
  else sinks.push_back(&writes);
  TeeSink tee(std::move(sinks));
  generate_traces(layer, arch, tee);

  LayerResult result;
  if (keep) result.traces = collector.take();
  const Trace& ofmap_writes = keep ? result.traces->ofmap_writes : writes.writes;
  const Cycle total_cycles = compute_runtime(ofmap_writes);

  const auto ifmap_e = ifmap_epochs.finish();
  const auto filter_e = filter_epochs.finish();
  DramReadFragment reads[] = {gen_dram_read_trace(ifmap_e, arch.word_bytes, keep),
                              gen_dram_read_trace(filter_e, arch.word_bytes, keep)};
  auto write_frag = gen_dram_write_trace(ofmap_writes, arch.ofmap_capacity_bytes(), arch.word_bytes, keep);
  result.dram = bandwidth_report(reads, write_frag, total_cycles, arch.word_bytes);
  result.filter_dram_read_bytes = reads[1].bytes;

  TrafficSummary& t = result.traffic;
  t.total_cycles = total_cycles;
  t.sram_reads_ifmap = counter.count(Stream::ifmap_read);
  t.sram_reads_filter = counter.count(Stream::filter_read);
  t.sram_writes_ofmap = counter.count(Stream::ofmap_write);
  t.sram_reads_ofmap_partials = counter.count(Stream::ofmap_partial_read);
  t.dram_read_words = result.dram.total_dram_reads / arch.word_bytes;
  t.dram_write_words = result.dram.total_dram_writes / arch.word_bytes;
  t.peak_dram_read_words = static_cast<std::int64_t>(result.dram.peak_read_bw) / arch.word_bytes;
  t.peak_dram_write_words = static_cast<std::int64_t>(result.dram.peak_write_bw) / arch.word_bytes;
  result.report = make_layer_report(layer, arch, t, table);
  return result;
}

Cycle layer_runtime(const LayerSpec& layer, const ArchConfig& arch) {
  return plan_cycles(fold_schedule(workload_counts(layer), arch));
}

TrafficSummary summarize_traffic(const TraceSet& sram, const Trace& dram_read, const Trace& dram_write) {
  TrafficSummary t;
  t.total_cycles = compute_runtime(sram.ofmap_writes);
  t.sram_reads_ifmap = static_cast<std::int64_t>(sram.ifmap_reads.entry_count());
  t.sram_reads_filter = static_cast<std::int64_t>(sram.filter_reads.entry_count());
  t.sram_writes_ofmap = static_cast<std::int64_t>(sram.ofmap_writes.entry_count());
  t.sram_reads_ofmap_partials = t.sram_writes_ofmap - distinct_count(sram.ofmap_writes);
  t.dram_read_words = static_cast<std::int64_t>(dram_read.entry_count());
  t.dram_write_words = static_cast<std::int64_t>(dram_write.entry_count());
  t.peak_dram_read_words = static_cast<std::int64_t>(dram_read.max_entries_per_cycle());
  t.peak_dram_write_words = static_cast<std::int64_t>(dram_write.max_entries_per_cycle());
  return t;
}

std::vector<ReadCapacityPoint> sweep_read_capacity(const LayerSpec& layer, const ArchConfig& arch,
                                                   std::span<const std::int64_t> sram_kb) {
  OperandLayout layout(layer, arch);
  layout.check_regions();

  struct Lane {
    std::int64_t kb;
    std::unique_ptr<Epochizer> ifmap;
    std::unique_ptr<Epochizer> filter;
    bool underflow = false;
  };
  std::vector<Lane> lanes;
  for (auto kb : sram_kb) {
    Lane lane;
    lane.kb = kb;
    if (kb * 1024 < arch.word_bytes) {
      lane.underflow = true;  // cannot hold a single word
      lanes.push_back(std::move(lane));
      continue;
    }
    lane.ifmap = std::make_unique<Epochizer>(kb * 1024, arch.word_bytes, arch.ifmap_offset,
                                             arch.ifmap_offset + static_cast<Address>(layout.ifmap_bytes()), false);
    lane.filter = std::make_unique<Epochizer>(kb * 1024, arch.word_bytes, arch.filter_offset,
                                              arch.filter_offset + static_cast<Address>(layout.filter_bytes()), false);
    lanes.push_back(std::move(lane));
  }

  // Footprint epochizer: one buffer big enough for everything.
  const std::int64_t whole = std::max(layout.ifmap_bytes(), layout.filter_bytes());
  Epochizer ifmap_all(whole, arch.word_bytes, arch.ifmap_offset,
                      arch.ifmap_offset + static_cast<Address>(layout.ifmap_bytes()), false);
  Epochizer filter_all(whole, arch.word_bytes, arch.filter_offset,
                       arch.filter_offset + static_cast<Address>(layout.filter_bytes()), false);

  class Fanout : public TraceSink {
   public:
    Fanout(std::vector<Lane>& lanes, Epochizer& ia, Epochizer& fa) : lanes_(lanes), ia_(ia), fa_(fa) {}
    void on_event(Stream stream, Cycle cycle, std::span<const Address> addresses) override {
      if (stream == Stream::ofmap_write) {
        last_write = cycle;
        return;
      }
      if (stream != Stream::ifmap_read && stream != Stream::filter_read) return;
      const bool is_ifmap = stream == Stream::ifmap_read;
      (is_ifmap ? ia_ : fa_).feed(cycle, addresses);
      for (auto& lane : lanes_) {
        if (lane.underflow) continue;
        try {
          (is_ifmap ? *lane.ifmap : *lane.filter).feed(cycle, addresses);
        } catch (const WorkingSetUnderflow&) {
          lane.underflow = true;
        }
      }
    }
    Cycle last_write = -1;

   private:
    std::vector<Lane>& lanes_;
    Epochizer& ia_;
    Epochizer& fa_;
  } fanout(lanes, ifmap_all, filter_all);

  generate_traces(layer, arch, fanout);

  std::int64_t footprint = 0;
  for (const auto& e : ifmap_all.finish()) footprint += e.bytes;
  for (const auto& e : filter_all.finish()) footprint += e.bytes;

  std::vector<ReadCapacityPoint> out;
  for (auto& lane : lanes) {
    ReadCapacityPoint p;
    p.sram_kb = lane.kb;
    p.footprint_bytes = footprint;
    p.total_cycles = fanout.last_write + 1;
    p.underflow = lane.underflow;
    if (!lane.underflow) {
      auto ie = lane.ifmap->finish();
      auto fe = lane.filter->finish();
      auto fi = gen_dram_read_trace(ie, arch.word_bytes, false);
      auto ff = gen_dram_read_trace(fe, arch.word_bytes, false);
      p.dram_read_bytes = fi.bytes + ff.bytes;
      p.steady_read_bw = fi.steady_bw + ff.steady_bw;
      std::vector<Spread> spreads = fi.spreads;
      spreads.insert(spreads.end(), ff.spreads.begin(), ff.spreads.end());
      p.peak_read_bytes = peak_words_per_cycle(std::move(spreads)) * arch.word_bytes;
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace systolic
