#include "systolic/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <sstream>

#include "systolic/errors.hpp"

namespace systolic {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view unquote(std::string_view s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

std::optional<std::int64_t> to_int(std::string_view s) {
  s = trim(s);
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return lines;
}

struct KeyInfo {
  const char* canonical;
  bool required;
};

// Lowercased key -> canonical spelling.
const std::map<std::string, KeyInfo>& known_keys() {
  static const std::map<std::string, KeyInfo> keys = {
      {"arrayheight", {"ArrayHeight", true}},   {"arraywidth", {"ArrayWidth", true}},
      {"ifmapsramsz", {"IfmapSRAMSz", true}},   {"filtersramsz", {"FilterSRAMSz", true}},
      {"ofmapsramsz", {"OfmapSRAMSz", true}},   {"ifmapoffset", {"IfmapOffset", true}},
      {"filteroffset", {"FilterOffset", true}}, {"ofmapoffset", {"OfmapOffset", true}},
      {"dataflow", {"DataFlow", true}},         {"topology", {"Topology", true}},
      {"wordbytes", {"WordBytes", false}},
  };
  return keys;
}

}  // namespace

std::string_view to_string(Dataflow dataflow) {
  switch (dataflow) {
    case Dataflow::output_stationary: return "os";
    case Dataflow::weight_stationary: return "ws";
    case Dataflow::input_stationary: return "is";
  }
  return "?";
}

Dataflow parse_dataflow(std::string_view text) {
  auto v = lower(trim(unquote(trim(text))));
  if (v == "os") return Dataflow::output_stationary;
  if (v == "ws") return Dataflow::weight_stationary;
  if (v == "is") return Dataflow::input_stationary;
  throw ConfigError("unsupported dataflow '" + std::string(text) +
                    "': legal values are 'os', 'ws' and 'is'");
}

void validate(const ArchConfig& c) {
  auto positive = [](std::int64_t v, const char* what) {
    if (v < 1) throw ConfigError(std::string(what) + " must be positive, got " + std::to_string(v));
  };
  positive(c.array_rows, "ArrayHeight");
  positive(c.array_cols, "ArrayWidth");
  positive(c.ifmap_sram_kb, "IfmapSRAMSz");
  positive(c.filter_sram_kb, "FilterSRAMSz");
  positive(c.ofmap_sram_kb, "OfmapSRAMSz");
  positive(c.word_bytes, "WordBytes");
}

ParsedConfig parse_config(std::string_view text) {
  ParsedConfig out;
  std::map<std::string, std::string> values;
  int line_no = 0;
  for (auto raw : split_lines(text)) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    // inline comment: '#' or ';' after whitespace
    for (std::size_t i = 1; i < line.size(); ++i) {
      if ((line[i] == '#' || line[i] == ';') && (line[i - 1] == ' ' || line[i - 1] == '\t')) {
        line = trim(line.substr(0, i));
        break;
      }
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      }
      continue;
    }
    auto sep = line.find('=');
    if (sep == std::string_view::npos) sep = line.find(':');
    if (sep == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    auto key = lower(trim(line.substr(0, sep)));
    auto value = std::string(unquote(trim(line.substr(sep + 1))));
    if (!known_keys().contains(key)) {
      out.warnings.push_back("line " + std::to_string(line_no) + ": unknown key '" +
                             std::string(trim(line.substr(0, sep))) + "' ignored");
      continue;
    }
    if (values.contains(key)) {
      out.warnings.push_back("line " + std::to_string(line_no) + ": duplicate key '" +
                             known_keys().at(key).canonical + "', last value wins");
    }
    values[key] = value;
  }

  for (const auto& [key, info] : known_keys()) {
    if (info.required && !values.contains(key)) {
      throw ConfigError(std::string("missing required key '") + info.canonical + "'");
    }
  }

  auto integer = [&](const std::string& key) {
    auto v = to_int(values.at(key));
    if (!v) {
      throw ConfigError(std::string(known_keys().at(key).canonical) + ": '" + values.at(key) +
                        "' is not an integer");
    }
    return *v;
  };
  auto offset = [&](const std::string& key) {
    auto v = integer(key);
    if (v < 0) {
      throw ConfigError(std::string(known_keys().at(key).canonical) + " must be non-negative");
    }
    return static_cast<Address>(v);
  };

  ArchConfig& c = out.config;
  c.array_rows = integer("arrayheight");
  c.array_cols = integer("arraywidth");
  c.ifmap_sram_kb = integer("ifmapsramsz");
  c.filter_sram_kb = integer("filtersramsz");
  c.ofmap_sram_kb = integer("ofmapsramsz");
  c.ifmap_offset = offset("ifmapoffset");
  c.filter_offset = offset("filteroffset");
  c.ofmap_offset = offset("ofmapoffset");
  c.dataflow = parse_dataflow(values.at("dataflow"));
  c.topology_path = values.at("topology");
  if (values.contains("wordbytes")) c.word_bytes = integer("wordbytes");
  validate(c);
  return out;
}

std::string serialize_config(const ArchConfig& c) {
  std::ostringstream os;
  os << "[architecture_presets]\n"
     << "ArrayHeight = " << c.array_rows << "\n"
     << "ArrayWidth = " << c.array_cols << "\n"
     << "IfmapSRAMSz = " << c.ifmap_sram_kb << "\n"
     << "FilterSRAMSz = " << c.filter_sram_kb << "\n"
     << "OfmapSRAMSz = " << c.ofmap_sram_kb << "\n"
     << "IfmapOffset = " << c.ifmap_offset << "\n"
     << "FilterOffset = " << c.filter_offset << "\n"
     << "OfmapOffset = " << c.ofmap_offset << "\n"
     << "DataFlow = " << to_string(c.dataflow) << "\n"
     << "WordBytes = " << c.word_bytes << "\n"
     << "Topology = " << c.topology_path << "\n";
  return os.str();
}

void validate(const LayerSpec& l) {
  auto positive = [&](std::int64_t v, const char* what) {
    if (v < 1) {
      throw TopologyError("layer '" + l.name + "': " + what + " must be positive, got " +
                          std::to_string(v));
    }
  };
  positive(l.ifmap_h, "IFMAP height");
  positive(l.ifmap_w, "IFMAP width");
  positive(l.filter_h, "filter height");
  positive(l.filter_w, "filter width");
  positive(l.channels, "channels");
  positive(l.num_filters, "filter count");
  positive(l.stride, "stride");
  if (l.filter_h > l.ifmap_h || l.filter_w > l.ifmap_w) {
    throw TopologyError("layer '" + l.name + "': filter " + std::to_string(l.filter_h) + "x" +
                        std::to_string(l.filter_w) + " larger than IFMAP " +
                        std::to_string(l.ifmap_h) + "x" + std::to_string(l.ifmap_w));
  }
}

std::vector<LayerSpec> parse_topology(std::string_view text) {
  std::vector<LayerSpec> layers;
  bool header_seen = false;
  int line_no = 0;
  for (auto raw : split_lines(text)) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() == 9 && fields.back().empty()) fields.pop_back();
    if (fields.size() != 8) {
      throw TopologyError("topology line " + std::to_string(line_no) + ": expected 8 columns, got " +
                          std::to_string(fields.size()));
    }
    LayerSpec l;
    l.name = std::string(fields[0]);
    if (l.name.empty()) {
      throw TopologyError("topology line " + std::to_string(line_no) + ": empty layer name");
    }
    std::int64_t* targets[] = {&l.ifmap_h,  &l.ifmap_w,   &l.filter_h,    &l.filter_w,
                               &l.channels, &l.num_filters, &l.stride};
    for (std::size_t i = 0; i < 7; ++i) {
      auto v = to_int(fields[i + 1]);
      if (!v) {
        throw TopologyError("topology line " + std::to_string(line_no) + " (layer '" + l.name +
                            "'): field " + std::to_string(i + 2) + " '" + std::string(fields[i + 1]) +
                            "' is not an integer");
      }
      *targets[i] = *v;
    }
    validate(l);
    layers.push_back(std::move(l));
  }
  return layers;
}

std::string serialize_topology(std::span<const LayerSpec> layers) {
  std::ostringstream os;
  os << "Layer name,IFMAP Height,IFMAP Width,Filter Height,Filter Width,Channels,Num Filter,Strides\n";
  for (const auto& l : layers) {
    os << l.name << ',' << l.ifmap_h << ',' << l.ifmap_w << ',' << l.filter_h << ',' << l.filter_w
       << ',' << l.channels << ',' << l.num_filters << ',' << l.stride << '\n';
  }
  return os.str();
}

LayerSpec lower_gemm(std::int64_t m, std::int64_t k, std::int64_t n, std::string name) {
  if (m < 1 || k < 1 || n < 1) {
    throw TopologyError("GEMM dimensions must be positive");
  }
  LayerSpec l{std::move(name), m, 1, 1, 1, k, n, 1};
  return l;
}

}  // namespace systolic
