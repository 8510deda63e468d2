#include "doctest.h"
#include "systolic/errors.hpp"
#include "systolic/layout.hpp"

using namespace systolic;

namespace {

ArchConfig arch(Address ifmap, Address filter, Address ofmap, std::int64_t word = 1) {
  ArchConfig a;
  a.array_rows = a.array_cols = 4;
  a.ifmap_sram_kb = a.filter_sram_kb = a.ofmap_sram_kb = 1;
  a.ifmap_offset = ifmap;
  a.filter_offset = filter;
  a.ofmap_offset = ofmap;
  a.word_bytes = word;
  return a;
}

}  // namespace

TEST_CASE("operand addresses are row-major with channels innermost") {
  const LayerSpec layer{"l", 5, 5, 3, 3, 3, 2, 1};
  OperandLayout at_zero(layer, arch(0, 1000, 2000));
  CHECK(at_zero.ifmap(0, 0, 0) == 0);
  CHECK(at_zero.ifmap(1, 0, 0) == 15);
  CHECK(at_zero.filter(1, 0, 0, 0) == 1000 + 27);
  CHECK(at_zero.filter(0, 2, 1, 2) == 1000 + (2 * 3 + 1) * 3 + 2);
  CHECK(at_zero.ofmap(4, 1) == 2000 + 4 * 2 + 1);
  CHECK_THROWS_AS(at_zero.ifmap(5, 0, 0), std::out_of_range);

  OperandLayout shifted(layer, arch(1'000'000, 2'000'000, 3'000'000));
  CHECK(shifted.ifmap(0, 0, 0) == 1'000'000);

  OperandLayout wide(layer, arch(0, 1000, 2000, 4));
  CHECK(wide.ifmap(1, 0, 0) == 60);
}

TEST_CASE("window elements walk (r, s, c) with c fastest") {
  const LayerSpec layer{"l", 5, 5, 2, 2, 2, 1, 2};
  OperandLayout lay(layer, arch(0, 1000, 2000));
  // window 1 is output (0, 1): top-left IFMAP pixel (0, 2)
  CHECK(lay.window_element(1, 0) == lay.ifmap(0, 2, 0));
  CHECK(lay.window_element(1, 1) == lay.ifmap(0, 2, 1));
  CHECK(lay.window_element(1, 2) == lay.ifmap(0, 3, 0));
  CHECK(lay.window_element(1, 4) == lay.ifmap(1, 2, 0));
  CHECK(lay.filter_element(0, 5) == lay.filter(0, 1, 0, 1));
}

TEST_CASE("overlapping regions are rejected") {
  const LayerSpec layer{"l", 10, 10, 3, 3, 4, 8, 1};
  CHECK_NOTHROW(OperandLayout(layer, arch(0, 400, 700)).check_regions());
  CHECK_THROWS_AS(OperandLayout(layer, arch(0, 399, 10000)).check_regions(), SimulationError);
  CHECK_THROWS_AS(OperandLayout(layer, arch(0, 1000, 1100)).check_regions(), SimulationError);
}
