#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "systolic/engine.hpp"
#include "systolic/errors.hpp"
#include "systolic/mapping.hpp"
#include "systolic/memory.hpp"
#include "systolic/simulate.hpp"

using namespace systolic;

namespace {

// One read per cycle, in the given order.
Trace serial_trace(const std::vector<Address>& addrs) {
  Trace t;
  for (std::size_t i = 0; i < addrs.size(); ++i) {
    Address a = addrs[i];
    t.append(static_cast<Cycle>(i), std::span<const Address>(&a, 1));
  }
  return t;
}

std::vector<Address> iota(Address n) {
  std::vector<Address> v(n);
  for (Address i = 0; i < n; ++i) v[i] = i;
  return v;
}

std::map<Cycle, std::int64_t> per_cycle(const Trace& t) {
  std::map<Cycle, std::int64_t> m;
  for (std::size_t i = 0; i < t.event_count(); ++i) m[t.event(i).cycle] += std::int64_t(t.event(i).addresses.size());
  return m;
}

ArchConfig arch(std::int64_t rows, std::int64_t cols, Dataflow df, std::int64_t kb) {
  ArchConfig a;
  a.array_rows = rows;
  a.array_cols = cols;
  a.ifmap_sram_kb = a.filter_sram_kb = a.ofmap_sram_kb = kb;
  a.filter_offset = 10'000'000;
  a.ofmap_offset = 20'000'000;
  a.dataflow = df;
  return a;
}

}  // namespace

TEST_CASE("epochize examples") {
  auto two = epochize(serial_trace(iota(100)), 50);
  REQUIRE(two.size() == 2);
  CHECK(two[0].bytes == 50);
  CHECK(two[1].bytes == 50);
  CHECK(two[0].first_use_cycle == 0);
  CHECK(two[0].last_use_cycle == 49);
  CHECK(two[1].first_use_cycle == 50);

  auto twice = iota(50);
  auto again = iota(50);
  twice.insert(twice.end(), again.begin(), again.end());
  auto one = epochize(serial_trace(twice), 50);
  REQUIRE(one.size() == 1);
  CHECK(one[0].bytes == 50);
  CHECK(one[0].address_set == iota(50));

  CHECK(epochize(serial_trace(twice), 1 << 20).size() == 1);
}

TEST_CASE("epochize detects working set underflow") {
  Trace t;
  std::vector<Address> row{0, 1, 2, 3, 4};
  t.append(0, row);
  CHECK_THROWS_AS(epochize(t, 4), WorkingSetUnderflow);
  CHECK(epochize(t, 5).size() == 1);
  std::vector<Address> dup{7, 7, 7, 7, 7, 7};
  Trace d;
  d.append(0, dup);
  CHECK(epochize(d, 1).size() == 1);
}

TEST_CASE("epochs respect capacity and cover every distinct address in order") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Address> addrs;
    for (int i = 0; i < 300; ++i) addrs.push_back(std::uniform_int_distribution<Address>(0, 80)(rng));
    const std::int64_t cap = std::uniform_int_distribution<std::int64_t>(1, 90)(rng);
    auto epochs = epochize(serial_trace(addrs), cap);
    std::int64_t words = 0;
    for (std::size_t k = 0; k < epochs.size(); ++k) {
      CHECK(epochs[k].bytes <= cap);
      CHECK(std::set<Address>(epochs[k].address_set.begin(), epochs[k].address_set.end()).size() ==
            epochs[k].address_set.size());
      if (k > 0) CHECK(epochs[k].first_use_cycle >= epochs[k - 1].last_use_cycle);
      words += epochs[k].bytes;
    }
    CHECK(words >= std::int64_t(std::set<Address>(addrs.begin(), addrs.end()).size()));
  }
}

TEST_CASE("DRAM read prefetch schedule") {
  SUBCASE("two equal epochs need one byte per cycle") {
    auto epochs = epochize(serial_trace(iota(100)), 50);
    auto frag = gen_dram_read_trace(epochs, 1);
    CHECK(frag.bytes == 100);
    CHECK(frag.steady_bw == doctest::Approx(1.0));
    CHECK(frag.prologue_cycles == 50);
    CHECK(frag.trace.first_cycle() == -50);
    CHECK(frag.trace.entry_count() == 100);
    CHECK(frag.trace.max_entries_per_cycle() == 1);
    // epoch 1 streams in while epoch 0 is in use
    CHECK(frag.trace.event(50).cycle == 0);
    CHECK(frag.trace.event(50).addresses[0] == 50);
  }
  SUBCASE("a single epoch has no steady demand") {
    auto frag = gen_dram_read_trace(epochize(serial_trace(iota(10)), 64), 1);
    CHECK(frag.steady_bw == 0.0);
    CHECK(frag.epochs == 1);
    CHECK(frag.bytes == 10);
  }
  SUBCASE("halving capacity on a reuse-free trace keeps bytes and doubles epochs") {
    auto big = gen_dram_read_trace(epochize(serial_trace(iota(128)), 64), 1, false);
    auto small = gen_dram_read_trace(epochize(serial_trace(iota(128)), 32), 1, false);
    CHECK(big.bytes == small.bytes);
    CHECK(small.epochs == 2 * big.epochs);
  }
}

TEST_CASE("spread peak matches materialized traces") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Spread> spreads;
    std::map<Cycle, std::int64_t> counts;
    const int n = std::uniform_int_distribution<int>(1, 5)(rng);
    for (int i = 0; i < n; ++i) {
      Spread s;
      s.start = std::uniform_int_distribution<Cycle>(-20, 40)(rng);
      s.span = std::uniform_int_distribution<std::int64_t>(1, 40)(rng);
      s.count = std::uniform_int_distribution<std::int64_t>(0, 90)(rng);
      for (std::int64_t w = 0; w < s.count; ++w) ++counts[s.start + (w * s.span) / s.count];
      spreads.push_back(s);
    }
    std::int64_t expect = 0;
    for (auto [c, k] : counts) expect = std::max(expect, k);
    CHECK(peak_words_per_cycle(spreads) == expect);
  }
}

TEST_CASE("DRAM writes drain only final values") {
  SUBCASE("output fits: one drain after the layer") {
    auto traces = generate_traces(lower_gemm(4, 4, 4), arch(4, 4, Dataflow::output_stationary, 1));
    auto frag = gen_dram_write_trace(traces.ofmap_writes, 1024);
    CHECK(frag.drains == 1);
    CHECK(frag.bytes == 16);
    CHECK(frag.trace.first_cycle() >= traces.total_cycles);
  }
  SUBCASE("half-size buffer drains twice") {
    auto traces = generate_traces(lower_gemm(4, 4, 4), arch(4, 4, Dataflow::output_stationary, 1));
    CHECK(gen_dram_write_trace(traces.ofmap_writes, 8).drains == 2);
  }
  SUBCASE("partial sums stay on chip") {
    // W_sz = 8 on 4 rows: two reduction folds
    auto traces = generate_traces(lower_gemm(6, 8, 3), arch(4, 4, Dataflow::weight_stationary, 1));
    CHECK(traces.ofmap_writes.entry_count() == 2 * 6 * 3);
    CHECK(traces.ofmap_partial_reads.entry_count() == 6 * 3);
    auto frag = gen_dram_write_trace(traces.ofmap_writes, 1024);
    CHECK(frag.bytes == 6 * 3);
    for (std::int64_t cap : {1, 2, 5, 7, 100}) CHECK(gen_dram_write_trace(traces.ofmap_writes, cap).bytes == 18);
  }
}

TEST_CASE("bandwidth_report") {
  DramReadFragment r;
  r.bytes = 1000;
  DramWriteFragment w;
  auto d = bandwidth_report(std::span(&r, 1), w, 500, 1);
  CHECK(d.avg_read_bw == doctest::Approx(2.0));
  CHECK(d.avg_write_bw == 0.0);
  CHECK(d.peak_write_bw == 0.0);
  CHECK_THROWS_AS(bandwidth_report(std::span(&r, 1), w, 0, 1), SimulationError);

  DramReadFragment parts[2];
  parts[0].bytes = 30;
  parts[1].bytes = 12;
  CHECK(bandwidth_report(parts, w, 10, 1).total_dram_reads == 42);
}

TEST_CASE("layer-level DRAM properties on random layers") {
  std::mt19937_64 rng(21);
  auto pick = [&](std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  };
  for (int trial = 0; trial < 40; ++trial) {
    LayerSpec l{"r", 0, 0, pick(1, 3), pick(1, 3), pick(1, 8), pick(1, 12), pick(1, 2)};
    l.ifmap_h = pick(l.filter_h, 12);
    l.ifmap_w = pick(l.filter_w, 12);
    for (auto df : kAllDataflows) {
      auto a = arch(pick(1, 8), pick(1, 8), df, 1);
      SimulationOptions opt;
      opt.retain_traces = true;
      auto res = simulate_layer(l, a, EnergyCostTable{}, opt);
      const auto& t = *res.traces;
      auto ifmap_all = t.ifmap_reads.all_addresses();
      auto filter_all = t.filter_reads.all_addresses();
      const std::set<Address> distinct_if(ifmap_all.begin(), ifmap_all.end());
      const std::set<Address> distinct_f(filter_all.begin(), filter_all.end());
      const auto footprint = std::int64_t(distinct_if.size() + distinct_f.size());
      CHECK(res.dram.total_dram_reads >= footprint);
      CHECK(res.dram.total_dram_reads <= std::int64_t(ifmap_all.size() + filter_all.size()));
      // every prefetched word is read from SRAM no earlier than it arrives
      std::map<Address, Cycle> last_use;
      for (const Trace* s : {&t.ifmap_reads, &t.filter_reads}) {
        for (std::size_t i = 0; i < s->event_count(); ++i) {
          for (auto addr : s->event(i).addresses) last_use[addr] = s->event(i).cycle;
        }
      }
      for (std::size_t i = 0; i < res.dram.read_trace.event_count(); ++i) {
        auto e = res.dram.read_trace.event(i);
        for (auto addr : e.addresses) {
          REQUIRE(last_use.count(addr));
          CHECK(last_use[addr] >= e.cycle);
        }
      }
      CHECK(res.dram.total_dram_writes == workload_counts(l).n_windows * l.num_filters);
      const auto peaks = per_cycle(res.dram.read_trace);
      std::int64_t peak = 0;
      for (auto [c, k] : peaks) peak = std::max(peak, k);
      CHECK(double(peak) == res.dram.peak_read_bw);

      // a buffer that holds everything reads exactly the footprint
      auto roomy = a;
      roomy.ifmap_sram_kb = roomy.filter_sram_kb = 64;
      CHECK(simulate_layer(l, roomy, EnergyCostTable{}).dram.total_dram_reads == footprint);
    }
  }
}
