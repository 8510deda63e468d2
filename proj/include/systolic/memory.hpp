#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "systolic/config.hpp"
#include "systolic/trace.hpp"

namespace systolic {

// Span of the trace during which one working-set buffer's contents are
// resident. `address_set` lists distinct words in first-use order; it is left
// empty when the epochizer runs without address retention.
struct Epoch {
  std::int64_t index = 0;
  std::vector<Address> address_set;
  Cycle first_use_cycle = 0;
  Cycle last_use_cycle = 0;
  std::int64_t bytes = 0;

  std::int64_t use_span() const { return last_use_cycle - first_use_cycle + 1; }
};

// Greedy online working-set partitioning of one read stream. A word already
// resident in the current epoch is a hit; a new word is admitted until the
// buffer is full, at which point the buffer swaps and the next epoch opens.
// Swaps happen at word granularity, so an epoch can end mid-cycle.
class Epochizer {
 public:
  /// Addresses must lie in [base, limit) and be word-aligned relative to base.
  Epochizer(std::int64_t capacity_bytes, std::int64_t word_bytes, Address base, Address limit,
            bool retain_addresses = true);

  /// Throws WorkingSetUnderflow when one cycle touches more distinct words
  /// than the buffer holds.
  void feed(Cycle cycle, std::span<const Address> sorted_addresses);

  std::vector<Epoch> finish();

 private:
  void open(Cycle cycle);

  std::int64_t capacity_words_;
  std::int64_t word_bytes_;
  Address base_;
  Address limit_;
  bool retain_;
  std::vector<std::uint32_t> stamp_;  // epoch id + 1 of the last admission
  std::vector<Epoch> epochs_;
  std::int64_t resident_ = 0;
};

std::vector<Epoch> epochize(const Trace& sram_reads, std::int64_t capacity_bytes,
                            std::int64_t word_bytes = 1);

// `count` words placed uniformly over [start, start + span): word n lands on
// cycle start + floor(n * span / count).
struct Spread {
  Cycle start = 0;
  std::int64_t span = 1;
  std::int64_t count = 0;
};

/// Largest per-cycle word count of the superposition of `spreads`.
std::int64_t peak_words_per_cycle(std::vector<Spread> spreads);

struct DramReadFragment {
  Trace trace;  // empty unless materialized
  std::vector<Spread> spreads;
  std::int64_t bytes = 0;
  std::int64_t epochs = 0;
  // Cold fill of the first epoch happens in [-prologue_cycles, first use).
  Cycle prologue_cycles = 0;
  // Max over k >= 1 of bytes(epoch k) / use_span(epoch k-1). Zero when one
  // epoch holds everything.
  double steady_bw = 0.0;
};

/// Prefetch schedule: epoch k+1 streams in uniformly while epoch k is in use;
/// epoch 0 streams in during a prologue as long as its own use span.
DramReadFragment gen_dram_read_trace(std::span<const Epoch> epochs, std::int64_t word_bytes,
                                     bool materialize = true);

struct DramWriteFragment {
  Trace trace;
  std::vector<Spread> spreads;
  std::int64_t bytes = 0;
  std::int64_t drains = 0;
};

/// Final OFMAP values (the last write to each address) accumulate in the
/// working buffer; a full buffer swaps and drains while the next one fills.
/// The last drain runs after the layer ends over as many cycles as it took
/// to fill. Partial sums that are later overwritten never reach DRAM.
DramWriteFragment gen_dram_write_trace(const Trace& ofmap_writes, std::int64_t capacity_bytes,
                                       std::int64_t word_bytes = 1, bool materialize = true);

struct DramDemand {
  Trace read_trace;
  Trace write_trace;
  double avg_read_bw = 0.0;  // bytes / cycle over the compute runtime
  double peak_read_bw = 0.0;  // busiest single cycle, prologue included
  double avg_write_bw = 0.0;
  double peak_write_bw = 0.0;
  double steady_read_bw = 0.0;  // sum of per-partition steady prefetch rates
  std::int64_t total_dram_reads = 0;   // bytes
  std::int64_t total_dram_writes = 0;  // bytes
};

/// Throws SimulationError when total_cycles is not positive.
DramDemand bandwidth_report(std::span<const DramReadFragment> reads, const DramWriteFragment& writes,
                            Cycle total_cycles, std::int64_t word_bytes);

}  // namespace systolic
