#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "systolic/config.hpp"

namespace systolic {

// Cycle-stamped address stream. Events are strictly increasing in cycle and
// each event's addresses are sorted ascending (duplicates allowed: two ports
// reading the same word in the same cycle are two SRAM accesses).
class Trace {
 public:
  struct Event {
    Cycle cycle;
    std::span<const Address> addresses;
  };

  /// Appends one event. `addresses` must be sorted; an empty span is ignored.
  /// Throws std::invalid_argument when `cycle` does not advance.
  void append(Cycle cycle, std::span<const Address> addresses);

  std::size_t event_count() const { return cycles_.size(); }
  std::size_t entry_count() const { return addresses_.size(); }
  bool empty() const { return cycles_.empty(); }

  Event event(std::size_t i) const {
    return {cycles_[i], std::span<const Address>(addresses_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i])};
  }

  Cycle first_cycle() const { return cycles_.front(); }
  Cycle last_cycle() const { return cycles_.back(); }

  /// Largest number of entries sharing one cycle.
  std::size_t max_entries_per_cycle() const;

  std::span<const Address> all_addresses() const { return addresses_; }
  std::span<const Cycle> cycles() const { return cycles_; }

  void reserve(std::size_t events, std::size_t entries);

  bool operator==(const Trace&) const = default;

 private:
  std::vector<Cycle> cycles_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Address> addresses_;
};

/// Union of two traces, re-sorted per cycle.
Trace merge(const Trace& a, const Trace& b);

enum class Stream { ifmap_read, filter_read, ofmap_write, ofmap_partial_read };

class TraceSink {
 public:
  virtual ~TraceSink() = default;
  /// Called in non-decreasing cycle order per stream; at most once per
  /// (stream, cycle). `addresses` is sorted and non-empty.
  virtual void on_event(Stream stream, Cycle cycle, std::span<const Address> addresses) = 0;
};

struct TraceSet {
  Trace ifmap_reads;
  Trace filter_reads;
  Trace ofmap_writes;
  // Read-back of partial sums between reduction folds (WS/IS only).
  Trace ofmap_partial_reads;
  Cycle total_cycles = 0;

  bool operator==(const TraceSet&) const = default;
};

class TraceCollector : public TraceSink {
 public:
  void on_event(Stream stream, Cycle cycle, std::span<const Address> addresses) override;
  /// Finalizes total_cycles from the OFMAP write stream and hands the set over.
  TraceSet take();

 private:
  TraceSet set_;
};

// Fans events out to several sinks.
class TeeSink : public TraceSink {
 public:
  explicit TeeSink(std::vector<TraceSink*> sinks) : sinks_(std::move(sinks)) {}
  void on_event(Stream stream, Cycle cycle, std::span<const Address> addresses) override {
    for (auto* s : sinks_) s->on_event(stream, cycle, addresses);
  }

 private:
  std::vector<TraceSink*> sinks_;
};

/// `cycle,address` header followed by one row per entry.
void write_trace_csv(std::ostream& os, const Trace& trace);

/// Inverse of write_trace_csv. Throws IoError on malformed or unsorted input.
Trace read_trace_csv(std::istream& is);

}  // namespace systolic
