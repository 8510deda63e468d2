#include "systolic/layout.hpp"

#include <stdexcept>
#include <string>

#include "systolic/errors.hpp"

namespace systolic {

OperandLayout::OperandLayout(const LayerSpec& layer, const ArchConfig& arch)
    : layer_(layer),
      counts_(workload_counts(layer)),
      ifmap_offset_(arch.ifmap_offset),
      filter_offset_(arch.filter_offset),
      ofmap_offset_(arch.ofmap_offset),
      word_(static_cast<Address>(arch.word_bytes)) {
  window_base_.reserve(static_cast<std::size_t>(counts_.n_windows));
  for (std::int64_t oh = 0; oh < counts_.ofmap_h; ++oh) {
    for (std::int64_t ow = 0; ow < counts_.ofmap_w; ++ow) {
      window_base_.push_back(ifmap(oh * layer.stride, ow * layer.stride, 0));
    }
  }
  element_offset_.reserve(static_cast<std::size_t>(counts_.window_size));
  for (std::int64_t r = 0; r < layer.filter_h; ++r) {
    for (std::int64_t s = 0; s < layer.filter_w; ++s) {
      for (std::int64_t c = 0; c < layer.channels; ++c) {
        element_offset_.push_back(static_cast<Address>((r * layer.ifmap_w + s) * layer.channels + c) * word_);
      }
    }
  }
}

Address OperandLayout::ifmap(std::int64_t h, std::int64_t w, std::int64_t c) const {
  if (h < 0 || h >= layer_.ifmap_h || w < 0 || w >= layer_.ifmap_w || c < 0 || c >= layer_.channels) {
    throw std::out_of_range("IFMAP coordinate out of range");
  }
  return ifmap_offset_ + static_cast<Address>((h * layer_.ifmap_w + w) * layer_.channels + c) * word_;
}

Address OperandLayout::filter(std::int64_t f, std::int64_t r, std::int64_t s, std::int64_t c) const {
  if (f < 0 || f >= layer_.num_filters || r < 0 || r >= layer_.filter_h || s < 0 ||
      s >= layer_.filter_w || c < 0 || c >= layer_.channels) {
    throw std::out_of_range("filter coordinate out of range");
  }
  return filter_offset_ +
         static_cast<Address>(((f * layer_.filter_h + r) * layer_.filter_w + s) * layer_.channels + c) * word_;
}

Address OperandLayout::ofmap(std::int64_t pixel, std::int64_t f) const {
  if (pixel < 0 || pixel >= counts_.n_windows || f < 0 || f >= counts_.n_filters) {
    throw std::out_of_range("OFMAP coordinate out of range");
  }
  return ofmap_element(pixel, f);
}

std::int64_t OperandLayout::ifmap_bytes() const {
  return layer_.ifmap_h * layer_.ifmap_w * layer_.channels * static_cast<std::int64_t>(word_);
}

std::int64_t OperandLayout::filter_bytes() const {
  return counts_.n_filters * counts_.window_size * static_cast<std::int64_t>(word_);
}

std::int64_t OperandLayout::ofmap_bytes() const {
  return counts_.n_windows * counts_.n_filters * static_cast<std::int64_t>(word_);
}

void OperandLayout::check_regions() const {
  struct Region {
    const char* name;
    Address begin;
    Address end;
  };
  Region regions[] = {
      {"IFMAP", ifmap_offset_, ifmap_offset_ + static_cast<Address>(ifmap_bytes())},
      {"filter", filter_offset_, filter_offset_ + static_cast<Address>(filter_bytes())},
      {"OFMAP", ofmap_offset_, ofmap_offset_ + static_cast<Address>(ofmap_bytes())},
  };
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      if (regions[i].begin < regions[j].end && regions[j].begin < regions[i].end) {
        throw SimulationError("layer '" + layer_.name + "': " + regions[i].name + " and " +
                              regions[j].name + " address regions overlap; raise the offsets");
      }
    }
  }
}

}  // namespace systolic
