#include "systolic/trace.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "systolic/errors.hpp"

namespace systolic {

void Trace::append(Cycle cycle, std::span<const Address> addresses) {
  if (addresses.empty()) return;
  if (!cycles_.empty() && cycle <= cycles_.back()) {
    throw std::invalid_argument("trace events must advance in cycle");
  }
  cycles_.push_back(cycle);
  addresses_.insert(addresses_.end(), addresses.begin(), addresses.end());
  offsets_.push_back(addresses_.size());
}

std::size_t Trace::max_entries_per_cycle() const {
  std::size_t best = 0;
  for (std::size_t i = 0; i + 1 < offsets_.size(); ++i) best = std::max(best, offsets_[i + 1] - offsets_[i]);
  return best;
}

void Trace::reserve(std::size_t events, std::size_t entries) {
  cycles_.reserve(events);
  offsets_.reserve(events + 1);
  addresses_.reserve(entries);
}

Trace merge(const Trace& a, const Trace& b) {
  Trace out;
  out.reserve(a.event_count() + b.event_count(), a.entry_count() + b.entry_count());
  std::size_t i = 0, j = 0;
  std::vector<Address> buf;
  while (i < a.event_count() || j < b.event_count()) {
    bool take_a = j >= b.event_count() || (i < a.event_count() && a.event(i).cycle <= b.event(j).cycle);
    bool take_b = i >= a.event_count() || (j < b.event_count() && b.event(j).cycle <= a.event(i).cycle);
    buf.clear();
    Cycle c = take_a ? a.event(i).cycle : b.event(j).cycle;
    if (take_a) {
      auto e = a.event(i++);
      buf.insert(buf.end(), e.addresses.begin(), e.addresses.end());
    }
    if (take_b) {
      auto e = b.event(j++);
      buf.insert(buf.end(), e.addresses.begin(), e.addresses.end());
    }
    if (take_a && take_b) std::sort(buf.begin(), buf.end());
    out.append(c, buf);
  }
  return out;
}

void TraceCollector::on_event(Stream stream, Cycle cycle, std::span<const Address> addresses) {
  switch (stream) {
    case Stream::ifmap_read: set_.ifmap_reads.append(cycle, addresses); break;
    case Stream::filter_read: set_.filter_reads.append(cycle, addresses); break;
    case Stream::ofmap_write: set_.ofmap_writes.append(cycle, addresses); break;
    case Stream::ofmap_partial_read: set_.ofmap_partial_reads.append(cycle, addresses); break;
  }
}

TraceSet TraceCollector::take() {
  set_.total_cycles = set_.ofmap_writes.empty() ? 0 : set_.ofmap_writes.last_cycle() + 1;
  return std::move(set_);
}

void write_trace_csv(std::ostream& os, const Trace& trace) {
  std::string buf;
  buf.reserve(1 << 16);
  buf += "cycle,address\n";
  char num[32];
  for (std::size_t i = 0; i < trace.event_count(); ++i) {
    auto e = trace.event(i);
    auto [cend, cec] = std::to_chars(num, num + sizeof num, e.cycle);
    std::string_view cyc(num, static_cast<std::size_t>(cend - num));
    std::string cycle_str(cyc);
    for (auto a : e.addresses) {
      buf += cycle_str;
      buf += ',';
      auto [aend, aec] = std::to_chars(num, num + sizeof num, a);
      buf.append(num, aend);
      buf += '\n';
    }
    if (buf.size() > (1 << 16) - 64) {
      os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw IoError("failed writing trace");
}

Trace read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("trace file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "cycle,address") throw IoError("trace header must be 'cycle,address', got '" + line + "'");

  Trace trace;
  std::vector<Address> pending;
  Cycle pending_cycle = 0;
  bool have_pending = false;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto comma = line.find(',');
    Cycle cycle = 0;
    Address addr = 0;
    const char* begin = line.data();
    const char* end = line.data() + line.size();
    bool ok = comma != std::string::npos;
    if (ok) {
      auto r1 = std::from_chars(begin, begin + comma, cycle);
      auto r2 = std::from_chars(begin + comma + 1, end, addr);
      ok = r1.ec == std::errc{} && r1.ptr == begin + comma && r2.ec == std::errc{} && r2.ptr == end;
    }
    if (!ok) throw IoError("malformed trace row " + std::to_string(line_no) + ": '" + line + "'");
    if (have_pending && cycle != pending_cycle) {
      if (cycle < pending_cycle) throw IoError("trace rows not sorted by cycle at row " + std::to_string(line_no));
      trace.append(pending_cycle, pending);
      pending.clear();
    }
    if (!pending.empty() && addr < pending.back()) {
      throw IoError("trace rows not sorted by address at row " + std::to_string(line_no));
    }
    pending_cycle = cycle;
    have_pending = true;
    pending.push_back(addr);
  }
  if (have_pending) trace.append(pending_cycle, pending);
  return trace;
}

}  // namespace systolic
