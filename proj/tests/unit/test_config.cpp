#include <random>

#include "doctest.h"
#include "systolic/config.hpp"
#include "systolic/errors.hpp"
#include "systolic/mapping.hpp"

using namespace systolic;

namespace {

const char* kDefaultCfg = R"(
[architecture_presets]
ArrayHeight = 128
ArrayWidth = 128
IfmapSRAMSz = 512
FilterSRAMSz = 512
OfmapSRAMSz = 256
IfmapOffset = 0
FilterOffset = 10000000
OfmapOffset = 20000000
DataFlow = os
Topology = net.csv
)";

}  // namespace

TEST_CASE("parse_config reads the 128x128 default") {
  auto parsed = parse_config(kDefaultCfg);
  const auto& c = parsed.config;
  CHECK(parsed.warnings.empty());
  CHECK(c.array_rows == 128);
  CHECK(c.array_cols == 128);
  CHECK(c.ifmap_sram_kb == 512);
  CHECK(c.filter_sram_kb == 512);
  CHECK(c.ofmap_sram_kb == 256);
  CHECK(c.filter_offset == 10000000);
  CHECK(c.ofmap_offset == 20000000);
  CHECK(c.dataflow == Dataflow::output_stationary);
  CHECK(c.word_bytes == 1);
  CHECK(c.topology_path == "net.csv");
  CHECK(c.ifmap_capacity_bytes() == 512 * 1024);
}

TEST_CASE("parse_config accepts a 1x1 array") {
  auto c = parse_config(
               "ArrayHeight=1\nArrayWidth=1\nIfmapSRAMSz=1\nFilterSRAMSz=1\nOfmapSRAMSz=1\n"
               "IfmapOffset=0\nFilterOffset=0\nOfmapOffset=0\nDataFlow=ws\nTopology=t.csv\n")
               .config;
  CHECK(c.array_rows == 1);
  CHECK(c.array_cols == 1);
  CHECK(c.dataflow == Dataflow::weight_stationary);
}

TEST_CASE("parse_config errors and warnings") {
  std::string text = kDefaultCfg;
  SUBCASE("unsupported dataflow") {
    text.replace(text.find("DataFlow = os"), 13, "DataFlow = rs");
    CHECK_THROWS_WITH_AS(parse_config(text), doctest::Contains("unsupported dataflow"), ConfigError);
  }
  SUBCASE("missing key") {
    text.erase(text.find("ArrayWidth = 128"), 16);
    CHECK_THROWS_AS(parse_config(text), ConfigError);
  }
  SUBCASE("non-positive dimension") {
    text.replace(text.find("ArrayHeight = 128"), 17, "ArrayHeight = 0");
    CHECK_THROWS_AS(parse_config(text), ConfigError);
  }
  SUBCASE("unknown key warns") {
    auto parsed = parse_config(text + "Frobnicate = 3\n");
    REQUIRE(parsed.warnings.size() == 1);
    CHECK(parsed.warnings[0].find("Frobnicate") != std::string::npos);
  }
  SUBCASE("case and comments") {
    text.replace(text.find("DataFlow = os"), 13, "dataflow = IS   # trailing");
    CHECK(parse_config(text).config.dataflow == Dataflow::input_stationary);
  }
}

TEST_CASE("config round-trips through serialize_config") {
  auto c = parse_config(kDefaultCfg).config;
  c.word_bytes = 2;
  c.dataflow = Dataflow::input_stationary;
  CHECK(parse_config(serialize_config(c)).config == c);
}

TEST_CASE("parse_topology") {
  const std::string header = "Layer name,IFMAP Height,IFMAP Width,Filter Height,Filter Width,Channels,Num Filter,Strides\n";
  SUBCASE("single row") {
    auto layers = parse_topology(header + "conv1,230,230,7,7,3,64,2,\n");
    REQUIRE(layers.size() == 1);
    CHECK(layers[0] == LayerSpec{"conv1", 230, 230, 7, 7, 3, 64, 2});
  }
  SUBCASE("header only") { CHECK(parse_topology(header).empty()); }
  SUBCASE("zero stride") { CHECK_THROWS_AS(parse_topology(header + "c,5,5,3,3,1,1,0\n"), TopologyError); }
  SUBCASE("filter larger than ifmap") {
    CHECK_THROWS_AS(parse_topology(header + "c,2,5,3,3,1,1,1\n"), TopologyError);
  }
  SUBCASE("wrong column count") { CHECK_THROWS_AS(parse_topology(header + "c,5,5,3,3,1,1\n"), TopologyError); }
  SUBCASE("non-integer field") { CHECK_THROWS_AS(parse_topology(header + "c,5,x,3,3,1,1,1\n"), TopologyError); }
  SUBCASE("order and round trip") {
    std::vector<LayerSpec> layers{{"a", 5, 5, 3, 3, 1, 1, 1}, {"b", 9, 7, 1, 1, 4, 8, 2}, {"c", 3, 3, 3, 3, 2, 2, 1}};
    CHECK(parse_topology(serialize_topology(layers)) == layers);
  }
}

TEST_CASE("lower_gemm") {
  CHECK(lower_gemm(4, 4, 4) == LayerSpec{"gemm", 4, 1, 1, 1, 4, 4, 1});
  auto mv = workload_counts(lower_gemm(1, 9, 1));
  CHECK(mv.n_windows == 1);
  CHECK(mv.n_filters == 1);
  auto c = workload_counts(lower_gemm(128, 256, 64));
  CHECK(c.n_windows == 128);
  CHECK(c.window_size == 256);
  CHECK(c.n_filters == 64);
  CHECK_THROWS_AS(lower_gemm(0, 1, 1), TopologyError);

  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::int64_t> d(1, 500);
  for (int i = 0; i < 200; ++i) {
    const auto m = d(rng), k = d(rng), n = d(rng);
    auto w = workload_counts(lower_gemm(m, k, n));
    CHECK(w.n_windows == m);
    CHECK(w.window_size == k);
    CHECK(w.n_filters == n);
    CHECK(w.macs_total == m * k * n);
  }
}
