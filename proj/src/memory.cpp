#include "systolic/memory.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "systolic/errors.hpp"

namespace systolic {

namespace {

// Words of a spread that land on offset u.
std::int64_t words_at(const Spread& s, std::int64_t u) {
  auto ceil_frac = [&](std::int64_t x) { return (x * s.count + s.span - 1) / s.span; };
  return ceil_frac(u + 1) - ceil_frac(u);
}

Cycle place(const Spread& s, std::int64_t n) { return s.start + (n * s.span) / s.count; }

Trace materialize_spreads(std::span<const Spread> spreads, std::span<const std::vector<Address>> addresses) {
  std::vector<std::pair<Cycle, Address>> entries;
  std::size_t total = 0;
  for (const auto& a : addresses) total += a.size();
  entries.reserve(total);
  for (std::size_t i = 0; i < spreads.size(); ++i) {
    const auto& words = addresses[i];
    for (std::size_t n = 0; n < words.size(); ++n) {
      entries.emplace_back(place(spreads[i], static_cast<std::int64_t>(n)), words[n]);
    }
  }
  std::sort(entries.begin(), entries.end());
  Trace t;
  std::vector<Address> buf;
  for (std::size_t i = 0; i < entries.size();) {
    buf.clear();
    Cycle c = entries[i].first;
    while (i < entries.size() && entries[i].first == c) buf.push_back(entries[i++].second);
    t.append(c, buf);
  }
  return t;
}

}  // namespace

Epochizer::Epochizer(std::int64_t capacity_bytes, std::int64_t word_bytes, Address base, Address limit,
                     bool retain_addresses)
    : capacity_words_(word_bytes > 0 ? capacity_bytes / word_bytes : 0),
      word_bytes_(word_bytes),
      base_(base),
      limit_(limit),
      retain_(retain_addresses) {
  if (word_bytes < 1 || capacity_words_ < 1) {
    throw SimulationError("buffer capacity of " + std::to_string(capacity_bytes) +
                          " bytes cannot hold one " + std::to_string(word_bytes) + "-byte word");
  }
  if (limit < base) throw std::invalid_argument("epochizer address range is inverted");
  stamp_.assign(static_cast<std::size_t>((limit - base) / static_cast<Address>(word_bytes) + 1), 0);
}

void Epochizer::open(Cycle cycle) {
  Epoch e;
  e.index = static_cast<std::int64_t>(epochs_.size());
  e.first_use_cycle = cycle;
  e.last_use_cycle = cycle;
  epochs_.push_back(std::move(e));
  resident_ = 0;
}

void Epochizer::feed(Cycle cycle, std::span<const Address> addrs) {
  if (addrs.empty()) return;
  std::int64_t distinct = 1;
  for (std::size_t i = 1; i < addrs.size(); ++i) distinct += addrs[i] != addrs[i - 1];
  if (distinct > capacity_words_) {
    throw WorkingSetUnderflow("working set underflow: cycle " + std::to_string(cycle) + " needs " +
                              std::to_string(distinct * word_bytes_) + " bytes but the buffer holds " +
                              std::to_string(capacity_words_ * word_bytes_));
  }
  if (epochs_.empty()) open(cycle);
  for (std::size_t i = 0; i < addrs.size(); ++i) {
    const Address a = addrs[i];
    if (i > 0 && a == addrs[i - 1]) continue;
    if (a < base_ || a >= limit_) throw std::out_of_range("address outside the epochizer range");
    auto& stamp = stamp_[static_cast<std::size_t>((a - base_) / static_cast<Address>(word_bytes_))];
    const auto current = static_cast<std::uint32_t>(epochs_.size());
    if (stamp != current) {
      if (resident_ == capacity_words_) open(cycle);
      stamp = static_cast<std::uint32_t>(epochs_.size());
      ++resident_;
      auto& e = epochs_.back();
      e.bytes += word_bytes_;
      if (retain_) e.address_set.push_back(a);
    }
    epochs_.back().last_use_cycle = cycle;
  }
}

std::vector<Epoch> Epochizer::finish() { return std::move(epochs_); }

std::vector<Epoch> epochize(const Trace& sram_reads, std::int64_t capacity_bytes, std::int64_t word_bytes) {
  if (sram_reads.empty()) return {};
  auto all = sram_reads.all_addresses();
  auto [lo, hi] = std::minmax_element(all.begin(), all.end());
  Epochizer ez(capacity_bytes, word_bytes, *lo, *hi + 1);
  for (std::size_t i = 0; i < sram_reads.event_count(); ++i) {
    auto e = sram_reads.event(i);
    ez.feed(e.cycle, e.addresses);
  }
  return ez.finish();
}

std::int64_t peak_words_per_cycle(std::vector<Spread> spreads) {
  std::erase_if(spreads, [](const Spread& s) { return s.count == 0; });
  if (spreads.empty()) return 0;
  std::sort(spreads.begin(), spreads.end(), [](const Spread& a, const Spread& b) { return a.start < b.start; });

  std::int64_t peak = 0;
  std::vector<Spread> active;
  std::size_t next = 0;
  Cycle cycle = spreads.front().start;
  while (next < spreads.size() || !active.empty()) {
    if (active.empty() && spreads[next].start > cycle) cycle = spreads[next].start;
    while (next < spreads.size() && spreads[next].start == cycle) active.push_back(spreads[next++]);
    // Runs where a single spread is alone are bounded by ceil(count / span).
    if (active.size() == 1) {
      const auto& s = active.front();
      Cycle stop = s.start + s.span;
      if (next < spreads.size()) stop = std::min(stop, spreads[next].start);
      if (stop - cycle > 2) {
        const std::int64_t u = cycle - s.start;
        const std::int64_t len = stop - cycle;
        // Max of words_at over [u, u + len) is ceil or floor of count / span.
        const std::int64_t hi = (s.count + s.span - 1) / s.span;
        const std::int64_t lo = s.count / s.span;
        std::int64_t best = lo;
        if (hi != lo) {
          // Offsets where the ceiling is reached are spaced at most
          // ceil(span / (count mod span)) apart; scan until one is found.
          for (std::int64_t v = u; v < u + len; ++v) {
            if (words_at(s, v) == hi) {
              best = hi;
              break;
            }
          }
        }
        peak = std::max(peak, best);
        cycle = stop;
        std::erase_if(active, [&](const Spread& a) { return a.start + a.span <= cycle; });
        continue;
      }
    }
    std::int64_t sum = 0;
    for (const auto& s : active) sum += words_at(s, cycle - s.start);
    peak = std::max(peak, sum);
    ++cycle;
    std::erase_if(active, [&](const Spread& a) { return a.start + a.span <= cycle; });
  }
  return peak;
}

DramReadFragment gen_dram_read_trace(std::span<const Epoch> epochs, std::int64_t word_bytes, bool materialize) {
  DramReadFragment out;
  out.epochs = static_cast<std::int64_t>(epochs.size());
  if (epochs.empty()) return out;
  std::vector<std::vector<Address>> words;
  for (std::size_t k = 0; k < epochs.size(); ++k) {
    const auto& e = epochs[k];
    Spread s;
    s.count = e.bytes / word_bytes;
    if (k == 0) {
      s.span = e.use_span();
      s.start = e.first_use_cycle - s.span;
      out.prologue_cycles = s.span;
    } else {
      const auto& prev = epochs[k - 1];
      s.start = prev.first_use_cycle;
      s.span = prev.use_span();
      out.steady_bw = std::max(out.steady_bw, static_cast<double>(e.bytes) / static_cast<double>(s.span));
    }
    out.bytes += e.bytes;
    out.spreads.push_back(s);
    if (materialize) {
      if (static_cast<std::int64_t>(e.address_set.size()) != s.count) {
        throw std::invalid_argument("epoch addresses were not retained");
      }
      words.push_back(e.address_set);
    }
  }
  if (materialize) out.trace = materialize_spreads(out.spreads, words);
  return out;
}

DramWriteFragment gen_dram_write_trace(const Trace& ofmap_writes, std::int64_t capacity_bytes,
                                       std::int64_t word_bytes, bool materialize) {
  DramWriteFragment out;
  if (ofmap_writes.empty()) return out;
  const std::int64_t capacity_words = capacity_bytes / word_bytes;
  if (capacity_words < 1) {
    throw SimulationError("OFMAP buffer of " + std::to_string(capacity_bytes) + " bytes cannot hold one word");
  }
  auto all = ofmap_writes.all_addresses();
  auto [lo_it, hi_it] = std::minmax_element(all.begin(), all.end());
  const Address base = *lo_it;
  auto slot = [&](Address a) { return static_cast<std::size_t>((a - base) / static_cast<Address>(word_bytes)); };
  std::vector<std::uint32_t> remaining(slot(*hi_it) + 1, 0);
  for (auto a : all) ++remaining[slot(a)];

  struct Drain {
    std::vector<Address> words;
    Cycle first = 0;
    Cycle last = 0;
  };
  std::vector<Drain> drains;
  for (std::size_t i = 0; i < ofmap_writes.event_count(); ++i) {
    auto e = ofmap_writes.event(i);
    for (auto a : e.addresses) {
      if (--remaining[slot(a)] != 0) continue;  // overwritten later: a partial sum
      if (drains.empty() || static_cast<std::int64_t>(drains.back().words.size()) == capacity_words) {
        drains.push_back({{}, e.cycle, e.cycle});
      }
      drains.back().words.push_back(a);
      drains.back().last = e.cycle;
    }
  }

  const Cycle end_of_layer = ofmap_writes.last_cycle() + 1;
  std::vector<std::vector<Address>> words;
  for (std::size_t k = 0; k < drains.size(); ++k) {
    Spread s;
    s.count = static_cast<std::int64_t>(drains[k].words.size());
    if (k + 1 < drains.size()) {
      s.start = drains[k + 1].first;
      s.span = drains[k + 1].last - drains[k + 1].first + 1;
    } else {
      s.start = end_of_layer;
      s.span = drains[k].last - drains[k].first + 1;
    }
    out.spreads.push_back(s);
    out.bytes += s.count * word_bytes;
    if (materialize) words.push_back(std::move(drains[k].words));
  }
  out.drains = static_cast<std::int64_t>(drains.size());
  if (materialize) out.trace = materialize_spreads(out.spreads, words);
  return out;
}

DramDemand bandwidth_report(std::span<const DramReadFragment> reads, const DramWriteFragment& writes,
                            Cycle total_cycles, std::int64_t word_bytes) {
  if (total_cycles <= 0) throw SimulationError("bandwidth report needs a positive cycle count");
  DramDemand d;
  std::vector<Spread> read_spreads;
  for (const auto& r : reads) {
    d.total_dram_reads += r.bytes;
    d.steady_read_bw += r.steady_bw;
    read_spreads.insert(read_spreads.end(), r.spreads.begin(), r.spreads.end());
    d.read_trace = d.read_trace.empty() ? r.trace : merge(d.read_trace, r.trace);
  }
  d.write_trace = writes.trace;
  d.total_dram_writes = writes.bytes;
  const auto cycles = static_cast<double>(total_cycles);
  d.avg_read_bw = static_cast<double>(d.total_dram_reads) / cycles;
  d.avg_write_bw = static_cast<double>(d.total_dram_writes) / cycles;
  d.peak_read_bw = static_cast<double>(peak_words_per_cycle(std::move(read_spreads)) * word_bytes);
  d.peak_write_bw = static_cast<double>(peak_words_per_cycle(writes.spreads) * word_bytes);
  return d;
}

}  // namespace systolic
