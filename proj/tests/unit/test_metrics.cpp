#include <sstream>

#include "doctest.h"
#include "systolic/engine.hpp"
#include "systolic/errors.hpp"
#include "systolic/mapping.hpp"
#include "systolic/metrics.hpp"
#include "systolic/simulate.hpp"

using namespace systolic;

namespace {

ArchConfig arch(std::int64_t rows, std::int64_t cols, Dataflow df) {
  ArchConfig a;
  a.array_rows = rows;
  a.array_cols = cols;
  a.ifmap_sram_kb = a.filter_sram_kb = a.ofmap_sram_kb = 4;
  a.filter_offset = 10'000'000;
  a.ofmap_offset = 20'000'000;
  a.dataflow = df;
  return a;
}

}  // namespace

TEST_CASE("compute_runtime") {
  Trace t;
  Address a = 5;
  t.append(0, std::span<const Address>(&a, 1));
  CHECK(compute_runtime(t) == 1);
  CHECK_THROWS_AS(compute_runtime(Trace{}), SimulationError);
  CHECK(compute_runtime(generate_traces(lower_gemm(4, 4, 4), arch(4, 4, Dataflow::output_stationary))) == 10);
}

TEST_CASE("energy is a linear combination of counts") {
  EnergyCounts c{64, 32, 16, 8};
  CHECK(energy(c, EnergyCostTable{1, 2, 2, 100}) == 960.0);
  CHECK(energy(c, EnergyCostTable{0, 0, 0, 0}) == 0.0);
  EnergyCounts twice{128, 64, 32, 16};
  CHECK(energy(twice, EnergyCostTable{}) == 2 * energy(c, EnergyCostTable{}));
}

TEST_CASE("energy table parsing") {
  auto t = parse_energy_table("# costs\nMacEnergy = 2\nsramreadenergy=3.5\n");
  CHECK(t.e_mac == 2.0);
  CHECK(t.e_sram_read == 3.5);
  CHECK(t.e_sram_write == 6.0);
  CHECK(t.e_dram_access == 200.0);
  CHECK(parse_energy_table(serialize_energy_table(EnergyCostTable{0.1, 0.2, 0.3, 1e-3})) ==
        EnergyCostTable{0.1, 0.2, 0.3, 1e-3});
  CHECK_THROWS_AS(parse_energy_table("MacEnergy = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_energy_table("Leakage = 1\n"), ConfigError);
}

TEST_CASE("layer report identities") {
  const LayerSpec l{"c", 9, 9, 3, 3, 3, 10, 1};
  for (auto df : kAllDataflows) {
    auto r = simulate_layer(l, arch(5, 7, df), EnergyCostTable{}).report;
    CHECK(r.compute_utilization >= 0.0);
    CHECK(r.compute_utilization <= r.mapping_efficiency);
    CHECK(r.mapping_efficiency <= 1.0);
    CHECK(r.compute_utilization * double(r.total_cycles * r.rows * r.cols) == doctest::Approx(double(r.macs_total)));
    CHECK(r.dram_write_bytes == 49 * 10);
  }
  // with only MAC energy, every dataflow costs the same
  const EnergyCostTable mac_only{1, 0, 0, 0};
  const double e = simulate_layer(l, arch(5, 7, Dataflow::output_stationary), mac_only).report.energy;
  CHECK(e == double(workload_counts(l).macs_total));
  CHECK(simulate_layer(l, arch(5, 7, Dataflow::weight_stationary), mac_only).report.energy == e);
  CHECK(simulate_layer(l, arch(5, 7, Dataflow::input_stationary), mac_only).report.energy == e);
}

TEST_CASE("network summary") {
  const auto a = arch(4, 4, Dataflow::weight_stationary);
  auto r = simulate_layer(lower_gemm(9, 7, 5), a, EnergyCostTable{}).report;
  CHECK_THROWS_AS(summarize_network({}), SimulationError);

  std::vector<LayerReport> one{r};
  auto n1 = summarize_network(one);
  CHECK(n1.total.total_cycles == r.total_cycles);
  CHECK(n1.total.energy == r.energy);
  CHECK(n1.total.mapping_efficiency == doctest::Approx(r.mapping_efficiency));

  std::vector<LayerReport> two{r, r};
  auto n2 = summarize_network(two);
  CHECK(n2.total.total_cycles == 2 * r.total_cycles);
  CHECK(n2.total.dram_read_bytes == 2 * r.dram_read_bytes);
  CHECK(n2.total.energy == 2 * r.energy);

  auto other = simulate_layer(lower_gemm(3, 20, 2), a, EnergyCostTable{}).report;
  std::vector<LayerReport> ab{r, other}, ba{other, r};
  CHECK(summarize_network(ab).total.total_cycles == summarize_network(ba).total.total_cycles);
}

TEST_CASE("network utilization stays below mapping efficiency") {
  // a hundred short one-row folds next to one long full fold
  const auto a = arch(8, 8, Dataflow::output_stationary);
  std::vector<LayerReport> layers{
      simulate_layer(lower_gemm(8, 20000, 8, "long"), a, EnergyCostTable{}).report,
      simulate_layer(lower_gemm(1, 1, 800, "short"), a, EnergyCostTable{}).report,
  };
  const auto t = summarize_network(layers).total;
  CHECK(t.compute_utilization <= t.mapping_efficiency);
  CHECK(t.mapping_efficiency <= 1.0);
  // a per-fold average would rank below the achieved utilization here
  CHECK(double(t.occupied_pe_slots) / double(t.fold_pe_slots) < t.compute_utilization);
  const double weighted = (layers[0].mapping_efficiency * double(layers[0].total_cycles) +
                           layers[1].mapping_efficiency * double(layers[1].total_cycles)) /
                          double(t.total_cycles);
  CHECK(t.mapping_efficiency == doctest::Approx(weighted));
}

TEST_CASE("summary CSV layout") {
  auto r = simulate_layer(lower_gemm(4, 4, 4, "g"), arch(4, 4, Dataflow::output_stationary), EnergyCostTable{}).report;
  std::ostringstream os;
  std::vector<LayerReport> rs{r};
  write_network_csv(os, summarize_network(rs));
  std::istringstream is(os.str());
  std::string header, row, total;
  std::getline(is, header);
  std::getline(is, row);
  std::getline(is, total);
  CHECK(header ==
        "layer,dataflow,rows,cols,total_cycles,mapping_eff,compute_util,sram_rd_ifmap,sram_rd_filter,"
        "sram_wr_ofmap,dram_rd_bytes,dram_wr_bytes,avg_rd_bw,peak_rd_bw,avg_wr_bw,peak_wr_bw,energy");
  CHECK(row.rfind("g,os,4,4,10,1.000000,0.400000,16,16,16,", 0) == 0);
  CHECK(total.rfind("total,os,4,4,10,", 0) == 0);
  CHECK(format_decimal(1.0 / 3.0) == "0.333333");
}
