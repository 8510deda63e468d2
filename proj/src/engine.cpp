#include "systolic/engine.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "systolic/errors.hpp"
#include "systolic/layout.hpp"
#include "systolic/mapping.hpp"

namespace systolic {

namespace {

class CycleBuffer {
 public:
  explicit CycleBuffer(std::size_t capacity) { buf_.reserve(capacity); }
  void push(Address a) { buf_.push_back(a); }
  void flush(TraceSink& sink, Stream stream, Cycle cycle) {
    if (buf_.empty()) return;
    if (!std::is_sorted(buf_.begin(), buf_.end())) std::sort(buf_.begin(), buf_.end());
    sink.on_event(stream, cycle, buf_);
    buf_.clear();
  }

 private:
  std::vector<Address> buf_;
};

struct Buffers {
  CycleBuffer ifmap;
  CycleBuffer filter;
  CycleBuffer partial;
  CycleBuffer write;
  explicit Buffers(std::size_t n) : ifmap(n), filter(n), partial(n), write(n) {}
};

void output_stationary(const OperandLayout& layout, const FoldPlan& plan, const ArchConfig& arch,
                       TraceSink& sink) {
  const std::int64_t w_sz = layout.counts().window_size;
  Buffers b(static_cast<std::size_t>(std::max(arch.array_rows, arch.array_cols)));
  Cycle base = 0;
  for (const auto& f : plan.folds) {
    const std::int64_t ru = f.rows_used, cu = f.cols_used;
    const std::int64_t win0 = f.row_index * arch.array_rows;
    const std::int64_t flt0 = f.col_index * arch.array_cols;
    const std::int64_t span = fold_span(f, plan.dataflow);
    for (std::int64_t t = 0; t < span; ++t) {
      const Cycle cycle = base + t;
      for (std::int64_t i = std::max<std::int64_t>(0, t - w_sz + 1); i <= std::min(ru - 1, t); ++i) {
        b.ifmap.push(layout.window_element(win0 + i, t - i));
      }
      for (std::int64_t j = std::max<std::int64_t>(0, t - w_sz + 1); j <= std::min(cu - 1, t); ++j) {
        b.filter.push(layout.filter_element(flt0 + j, t - j));
      }
      // PEs on anti-diagonal i + j == d finish their reduction this cycle.
      const std::int64_t d = t - (w_sz - 1);
      if (d >= 0) {
        for (std::int64_t i = std::max<std::int64_t>(0, d - cu + 1); i <= std::min(ru - 1, d); ++i) {
          b.write.push(layout.ofmap_element(win0 + i, flt0 + (d - i)));
        }
      }
      b.ifmap.flush(sink, Stream::ifmap_read, cycle);
      b.filter.flush(sink, Stream::filter_read, cycle);
      b.write.flush(sink, Stream::ofmap_write, cycle);
    }
    base += span;
  }
}

// Shared schedule of WS and IS. The stationary operand is filled from the top
// edge, the streamed operand enters from the left edge, and sums reduce down
// each column.
template <typename FillAddr, typename StreamAddr, typename OutAddr>
void stationary(const FoldPlan& plan, const ArchConfig& arch, TraceSink& sink, Stream fill_stream,
                Stream stream_stream, FillAddr fill_addr, StreamAddr stream_addr, OutAddr out_addr) {
  Buffers b(static_cast<std::size_t>(std::max(arch.array_rows, arch.array_cols)));
  Cycle base = 0;
  for (const auto& f : plan.folds) {
    const std::int64_t ru = f.rows_used, cu = f.cols_used, n = f.stream_len;
    const std::int64_t k0 = f.row_index * arch.array_rows;
    const std::int64_t col0 = f.col_index * arch.array_cols;
    const bool accumulate = f.row_index > 0;
    const std::int64_t span = fold_span(f, plan.dataflow);

    auto& fill_buf = fill_stream == Stream::filter_read ? b.filter : b.ifmap;
    auto& stream_buf = stream_stream == Stream::filter_read ? b.filter : b.ifmap;

    for (std::int64_t t = 0; t < span; ++t) {
      const Cycle cycle = base + t;
      if (t < ru) {
        const std::int64_t row = ru - 1 - t;
        for (std::int64_t j = 0; j < cu; ++j) fill_buf.push(fill_addr(col0 + j, k0 + row));
      } else {
        const std::int64_t s = t - ru;
        for (std::int64_t r = std::max<std::int64_t>(0, s - n + 1); r <= std::min(ru - 1, s); ++r) {
          stream_buf.push(stream_addr(s - r, k0 + r));
        }
        const std::int64_t d = s - (ru - 1);
        if (d >= 0) {
          for (std::int64_t j = std::max<std::int64_t>(0, d - n + 1); j <= std::min(cu - 1, d); ++j) {
            auto a = out_addr(col0 + j, d - j);
            b.write.push(a);
            if (accumulate) b.partial.push(a);
          }
        }
      }
      b.ifmap.flush(sink, Stream::ifmap_read, cycle);
      b.filter.flush(sink, Stream::filter_read, cycle);
      b.partial.flush(sink, Stream::ofmap_partial_read, cycle);
      b.write.flush(sink, Stream::ofmap_write, cycle);
    }
    base += span;
  }
}

void require(const ArchConfig& arch, Dataflow expected) {
  if (arch.dataflow != expected) {
    throw SimulationError("engine for '" + std::string(to_string(expected)) +
                          "' invoked with dataflow '" + std::string(to_string(arch.dataflow)) + "'");
  }
}

}  // namespace

void generate_traces(const LayerSpec& layer, const ArchConfig& arch, TraceSink& sink) {
  validate(arch);
  OperandLayout layout(layer, arch);
  layout.check_regions();
  const auto plan = fold_schedule(layout.counts(), arch);
  switch (arch.dataflow) {
    case Dataflow::output_stationary:
      output_stationary(layout, plan, arch, sink);
      break;
    case Dataflow::weight_stationary:
      // columns = filters, rows = reduction elements, stream = windows
      stationary(
          plan, arch, sink, Stream::filter_read, Stream::ifmap_read,
          [&](std::int64_t filter, std::int64_t k) { return layout.filter_element(filter, k); },
          [&](std::int64_t window, std::int64_t k) { return layout.window_element(window, k); },
          [&](std::int64_t filter, std::int64_t window) { return layout.ofmap_element(window, filter); });
      break;
    case Dataflow::input_stationary:
      // columns = windows, rows = reduction elements, stream = filters
      stationary(
          plan, arch, sink, Stream::ifmap_read, Stream::filter_read,
          [&](std::int64_t window, std::int64_t k) { return layout.window_element(window, k); },
          [&](std::int64_t filter, std::int64_t k) { return layout.filter_element(filter, k); },
          [&](std::int64_t window, std::int64_t filter) { return layout.ofmap_element(window, filter); });
      break;
  }
}

TraceSet generate_traces(const LayerSpec& layer, const ArchConfig& arch) {
  TraceCollector collector;
  generate_traces(layer, arch, collector);
  return collector.take();
}

TraceSet gen_traces_os(const LayerSpec& layer, const ArchConfig& arch) {
  require(arch, Dataflow::output_stationary);
  return generate_traces(layer, arch);
}

TraceSet gen_traces_ws(const LayerSpec& layer, const ArchConfig& arch) {
  require(arch, Dataflow::weight_stationary);
  return generate_traces(layer, arch);
}

TraceSet gen_traces_is(const LayerSpec& layer, const ArchConfig& arch) {
  require(arch, Dataflow::input_stationary);
  return generate_traces(layer, arch);
}

}  // namespace systolic
