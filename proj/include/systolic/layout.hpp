#pragma once

#include <cstdint>
#include <vector>

#include "systolic/config.hpp"
#include "systolic/mapping.hpp"

namespace systolic {

// Byte addresses of every operand of one layer. All three tensors are
// row-major with channels innermost:
//   IFMAP  [h][w][c]
//   filter [f][r][s][c]
//   OFMAP  [p][f]        p = raster index of the output pixel
// Window elements are enumerated (r, s, c) with c fastest, so element k of a
// window pairs with element k of every filter.
class OperandLayout {
 public:
  OperandLayout(const LayerSpec& layer, const ArchConfig& arch);

  Address ifmap(std::int64_t h, std::int64_t w, std::int64_t c) const;
  Address filter(std::int64_t f, std::int64_t r, std::int64_t s, std::int64_t c) const;
  Address ofmap(std::int64_t pixel, std::int64_t f) const;

  /// Element k of convolution window p.
  Address window_element(std::int64_t window, std::int64_t k) const {
    return window_base_[static_cast<std::size_t>(window)] + element_offset_[static_cast<std::size_t>(k)];
  }
  /// Element k of filter f.
  Address filter_element(std::int64_t f, std::int64_t k) const {
    return filter_offset_ + static_cast<Address>(f * counts_.window_size + k) * word_;
  }
  Address ofmap_element(std::int64_t window, std::int64_t f) const {
    return ofmap_offset_ + static_cast<Address>(window * counts_.n_filters + f) * word_;
  }

  std::int64_t ifmap_bytes() const;
  std::int64_t filter_bytes() const;
  std::int64_t ofmap_bytes() const;

  /// Throws SimulationError if the three operand regions intersect.
  void check_regions() const;

  const WorkloadCounts& counts() const { return counts_; }
  const LayerSpec& layer() const { return layer_; }

 private:
  LayerSpec layer_;
  WorkloadCounts counts_;
  Address ifmap_offset_;
  Address filter_offset_;
  Address ofmap_offset_;
  Address word_;
  std::vector<Address> window_base_;
  std::vector<Address> element_offset_;
};

}  // namespace systolic
