#include "systolic/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "systolic/config.hpp"
#include "systolic/errors.hpp"
#include "systolic/metrics.hpp"
#include "systolic/parallel.hpp"
#include "systolic/simulate.hpp"
#include "systolic/sweep.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace systolic::cli {

namespace {

constexpr const char* kTraceKinds[] = {"ifmap_sram_read", "filter_sram_read", "ofmap_sram_write", "dram_read",
                                       "dram_write"};

struct Overrides {
  std::string dataflow;
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::int64_t sram_ifmap = 0;
  std::int64_t sram_filter = 0;
  std::int64_t sram_ofmap = 0;
};

struct RunArgs {
  std::string config;
  std::string topology;
  std::string out;
  std::string energy_table;
  std::string run_id;
  bool no_traces = false;
  int jobs = 0;
  Overrides overrides;
};

struct SweepArgs {
  std::string study;
  std::vector<std::string> workloads;
  std::string config;
  std::string out;
  std::string energy_table;
  std::vector<std::int64_t> sizes;
  std::vector<std::int64_t> sram_sizes;
  std::vector<std::int64_t> ladder;
  std::int64_t total_pes = kDefaultTotalPes;
  std::vector<std::string> dataflows;
  int jobs = 0;
  Overrides overrides;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

void close_out(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

fs::path output_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutEnvVar); env && *env) return env;
  return "runs";
}

int jobs_or_default(int jobs) {
  if (jobs > 0) return jobs;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

ArchConfig default_arch() {
  ArchConfig a;
  a.array_rows = a.array_cols = 128;
  a.ifmap_sram_kb = a.filter_sram_kb = 512;
  a.ofmap_sram_kb = 256;
  a.ifmap_offset = 0;
  a.filter_offset = 10'000'000;
  a.ofmap_offset = 20'000'000;
  return a;
}

void apply(const Overrides& o, ArchConfig& a) {
  if (!o.dataflow.empty()) a.dataflow = parse_dataflow(o.dataflow);
  if (o.rows) a.array_rows = o.rows;
  if (o.cols) a.array_cols = o.cols;
  if (o.sram_ifmap) a.ifmap_sram_kb = o.sram_ifmap;
  if (o.sram_filter) a.filter_sram_kb = o.sram_filter;
  if (o.sram_ofmap) a.ofmap_sram_kb = o.sram_ofmap;
  validate(a);
}

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--dataflow", o.dataflow, "os, ws or is");
  cmd->add_option("--rows", o.rows, "array rows")->check(CLI::PositiveNumber);
  cmd->add_option("--cols", o.cols, "array columns")->check(CLI::PositiveNumber);
  cmd->add_option("--sram-ifmap", o.sram_ifmap, "IFMAP buffer KB")->check(CLI::PositiveNumber);
  cmd->add_option("--sram-filter", o.sram_filter, "filter buffer KB")->check(CLI::PositiveNumber);
  cmd->add_option("--sram-ofmap", o.sram_ofmap, "OFMAP buffer KB")->check(CLI::PositiveNumber);
}

EnergyCostTable load_energy(const std::string& path) {
  if (path.empty()) return {};
  return parse_energy_table(read_file(path));
}

std::uint32_t fnv1a(std::string_view text) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : text) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

std::string make_run_id(std::string_view inputs) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[64];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  char hash[16];
  std::snprintf(hash, sizeof hash, "%08x", fnv1a(inputs));
  return std::string(buf) + "-" + hash;
}

// File-system safe, unique layer names.
std::vector<std::string> layer_stems(const std::vector<LayerSpec>& layers) {
  std::vector<std::string> stems;
  std::set<std::string> used;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    std::string s = layers[i].name;
    for (auto& ch : s) {
      if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_' && ch != '.') ch = '_';
    }
    if (s.empty() || s == "." || s == "..") s = "layer" + std::to_string(i);
    std::string unique = s;
    for (int n = 2; used.count(unique); ++n) unique = s + "_" + std::to_string(n);
    used.insert(unique);
    stems.push_back(unique);
  }
  return stems;
}

json arch_json(const ArchConfig& a) {
  return {{"array_rows", a.array_rows},       {"array_cols", a.array_cols},
          {"ifmap_sram_kb", a.ifmap_sram_kb}, {"filter_sram_kb", a.filter_sram_kb},
          {"ofmap_sram_kb", a.ofmap_sram_kb}, {"ifmap_offset", a.ifmap_offset},
          {"filter_offset", a.filter_offset}, {"ofmap_offset", a.ofmap_offset},
          {"dataflow", std::string(to_string(a.dataflow))}, {"word_bytes", a.word_bytes},
          {"topology", a.topology_path}};
}

ArchConfig arch_from_json(const json& j) {
  ArchConfig a;
  a.array_rows = j.at("array_rows").get<std::int64_t>();
  a.array_cols = j.at("array_cols").get<std::int64_t>();
  a.ifmap_sram_kb = j.at("ifmap_sram_kb").get<std::int64_t>();
  a.filter_sram_kb = j.at("filter_sram_kb").get<std::int64_t>();
  a.ofmap_sram_kb = j.at("ofmap_sram_kb").get<std::int64_t>();
  a.ifmap_offset = j.at("ifmap_offset").get<Address>();
  a.filter_offset = j.at("filter_offset").get<Address>();
  a.ofmap_offset = j.at("ofmap_offset").get<Address>();
  a.dataflow = parse_dataflow(j.at("dataflow").get<std::string>());
  a.word_bytes = j.at("word_bytes").get<std::int64_t>();
  a.topology_path = j.at("topology").get<std::string>();
  validate(a);
  return a;
}

json layer_json(const LayerSpec& l) {
  return {{"name", l.name},         {"ifmap_h", l.ifmap_h},   {"ifmap_w", l.ifmap_w},
          {"filter_h", l.filter_h}, {"filter_w", l.filter_w}, {"channels", l.channels},
          {"num_filters", l.num_filters}, {"stride", l.stride}};
}

LayerSpec layer_from_json(const json& j) {
  LayerSpec l;
  l.name = j.at("name").get<std::string>();
  l.ifmap_h = j.at("ifmap_h").get<std::int64_t>();
  l.ifmap_w = j.at("ifmap_w").get<std::int64_t>();
  l.filter_h = j.at("filter_h").get<std::int64_t>();
  l.filter_w = j.at("filter_w").get<std::int64_t>();
  l.channels = j.at("channels").get<std::int64_t>();
  l.num_filters = j.at("num_filters").get<std::int64_t>();
  l.stride = j.at("stride").get<std::int64_t>();
  validate(l);
  return l;
}

json energy_json(const EnergyCostTable& t) {
  return {{"mac", t.e_mac}, {"sram_read", t.e_sram_read}, {"sram_write", t.e_sram_write}, {"dram", t.e_dram_access}};
}

EnergyCostTable energy_from_json(const json& j) {
  EnergyCostTable t;
  t.e_mac = j.at("mac").get<double>();
  t.e_sram_read = j.at("sram_read").get<double>();
  t.e_sram_write = j.at("sram_write").get<double>();
  t.e_dram_access = j.at("dram").get<double>();
  return t;
}

void write_trace_file(const fs::path& path, const Trace& trace) {
  auto out = open_out(path);
  write_trace_csv(out, trace);
  close_out(out, path);
}

Trace read_trace_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("missing trace file '" + path.string() + "'");
  try {
    return read_trace_csv(in);
  } catch (const IoError& e) {
    throw IoError(path.filename().string() + ": " + e.what());
  }
}

void write_reports(const fs::path& dir, const std::vector<LayerReport>& reports) {
  const auto summary_path = dir / "summary.csv";
  auto summary = open_out(summary_path);
  write_summary_csv(summary, reports);
  close_out(summary, summary_path);
  const auto network_path = dir / "network.csv";
  auto network = open_out(network_path);
  write_network_csv(network, summarize_network(reports));
  close_out(network, network_path);
}

// Re-throws `e` with the layer name prepended, keeping its category.
[[noreturn]] void rethrow_for_layer(const std::string& layer) {
  const std::string prefix = "layer '" + layer + "': ";
  try {
    throw;
  } catch (const WorkingSetUnderflow& e) {
    throw WorkingSetUnderflow(prefix + e.what());
  } catch (const SimulationError& e) {
    throw SimulationError(prefix + e.what());
  } catch (const TopologyError& e) {
    throw TopologyError(prefix + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const IoError& e) {
    throw IoError(prefix + e.what());
  }
}

int cmd_run(const RunArgs& args, std::ostream& out) {
  const fs::path config_path = args.config;
  const std::string config_text = read_file(config_path);
  auto parsed = parse_config(config_text);
  for (const auto& w : parsed.warnings) out << "warning: " << w << '\n';
  ArchConfig arch = parsed.config;
  apply(args.overrides, arch);

  fs::path topology = args.topology.empty() ? fs::path(arch.topology_path) : fs::path(args.topology);
  if (args.topology.empty() && topology.is_relative() && !fs::exists(topology)) {
    topology = config_path.parent_path() / topology;
  }
  arch.topology_path = topology.string();
  const std::string topology_text = read_file(topology);
  auto layers = parse_topology(topology_text);
  if (layers.empty()) throw TopologyError("topology '" + topology.string() + "' has no layers");
  const auto stems = layer_stems(layers);
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i].name = stems[i];
  const EnergyCostTable table = load_energy(args.energy_table);

  const std::string run_id = !args.run_id.empty()
                                 ? args.run_id
                                 : make_run_id(serialize_config(arch) + topology_text + serialize_energy_table(table));
  const fs::path dir = output_root(args.out) / run_id;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

  const bool traces = !args.no_traces;
  json manifest;
  manifest["run_id"] = run_id;
  manifest["config"] = arch_json(arch);
  manifest["energy_table"] = energy_json(table);
  manifest["output_dir"] = dir.string();
  manifest["traces"] = traces;
  json files = json::array();
  json layer_list = json::array();
  for (const auto& l : layers) {
    layer_list.push_back(layer_json(l));
    if (traces) {
      for (const char* kind : kTraceKinds) files.push_back(l.name + "_" + kind + ".csv");
    }
  }
  files.push_back("summary.csv");
  files.push_back("network.csv");
  manifest["layers"] = layer_list;
  manifest["files"] = files;
  {
    const auto path = dir / "manifest.json";
    auto m = open_out(path);
    m << manifest.dump(2) << '\n';
    close_out(m, path);
  }

  std::vector<LayerReport> reports(layers.size());
  SimulationOptions options;
  options.retain_traces = traces;
  parallel_for(layers.size(), jobs_or_default(args.jobs), [&](std::size_t i) {
    const auto& l = layers[i];
    try {
      auto result = simulate_layer(l, arch, table, options);
      if (traces) {
        const Trace* streams[] = {&result.traces->ifmap_reads, &result.traces->filter_reads,
                                  &result.traces->ofmap_writes, &result.dram.read_trace, &result.dram.write_trace};
        for (std::size_t k = 0; k < std::size(kTraceKinds); ++k) {
          write_trace_file(dir / (l.name + "_" + kTraceKinds[k] + ".csv"), *streams[k]);
        }
      }
      reports[i] = result.report;
    } catch (const Error&) {
      rethrow_for_layer(l.name);
    }
  });
  write_reports(dir, reports);
  out << dir.string() << '\n';
  return kOk;
}

std::vector<Dataflow> resolve_dataflows(const std::vector<std::string>& names) {
  if (names.empty()) return {std::begin(kAllDataflows), std::end(kAllDataflows)};
  std::vector<Dataflow> out;
  for (const auto& n : names) out.push_back(parse_dataflow(n));
  return out;
}

template <typename Cell>
std::size_t ok_cells(const std::vector<Cell>& cells) {
  std::size_t ok = 0;
  for (const auto& c : cells) ok += c.status == "ok" || c.status == "partial";
  return ok;
}

int cmd_sweep(const SweepArgs& args, std::ostream& out) {
  const Study study = parse_study(args.study);
  ArchConfig base = default_arch();
  if (!args.config.empty()) base = parse_config(read_file(args.config)).config;
  apply(args.overrides, base);
  const EnergyCostTable table = load_energy(args.energy_table);
  std::vector<Workload> workloads;
  for (const auto& w : args.workloads) workloads.push_back(load_workload(w));
  const auto dataflows = resolve_dataflows(args.dataflows);
  const int jobs = jobs_or_default(args.jobs);

  const fs::path dir = output_root(args.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  const fs::path path = dir / (std::string(to_string(study)) + ".csv");
  auto file = open_out(path);

  std::size_t ok = 0, total = 0;
  auto emit = [&](const auto& cells) {
    write_study_csv(file, std::span(cells));
    ok = ok_cells(cells);
    total = cells.size();
  };
  switch (study) {
    case Study::dataflow_vs_size:
      emit(run_dataflow_study(workloads, args.sizes.empty() ? kDefaultArraySizes : args.sizes, base, table, jobs));
      break;
    case Study::memory_sweep:
      emit(run_memory_sweep(workloads, args.sram_sizes.empty() ? kDefaultSramLadderKb : args.sram_sizes, base,
                            dataflows, jobs));
      break;
    case Study::aspect_ratio:
      emit(run_aspect_ratio_study(workloads, args.total_pes, base, jobs));
      break;
    case Study::scale_up_vs_out:
      emit(run_scale_study(workloads, args.ladder.empty() ? kDefaultPeLadder : args.ladder, base, dataflows, jobs));
      break;
  }
  close_out(file, path);
  out << path.string() << ": " << ok << "/" << total << " cells ok\n";
  if (ok == 0) throw SimulationError("no sweep cell succeeded");
  return kOk;
}

int cmd_report(const std::string& run_dir, std::ostream& out) {
  regenerate_reports(run_dir);
  out << (fs::path(run_dir) / "summary.csv").string() << '\n';
  return kOk;
}

}  // namespace

void regenerate_reports(const fs::path& run_dir) {
  const auto manifest_path = run_dir / "manifest.json";
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw IoError("corrupt manifest '" + manifest_path.string() + "': " + e.what());
  }
  ArchConfig arch;
  EnergyCostTable table;
  std::vector<LayerSpec> layers;
  try {
    if (!manifest.at("traces").get<bool>()) {
      throw IoError("run '" + run_dir.string() + "' was made without traces");
    }
    arch = arch_from_json(manifest.at("config"));
    table = energy_from_json(manifest.at("energy_table"));
    for (const auto& l : manifest.at("layers")) layers.push_back(layer_from_json(l));
  } catch (const json::exception& e) {
    throw IoError("corrupt manifest '" + manifest_path.string() + "': " + e.what());
  }

  std::vector<LayerReport> reports;
  for (const auto& l : layers) {
    auto trace = [&](const char* kind) { return read_trace_file(run_dir / (l.name + "_" + kind + ".csv")); };
    TraceSet sram;
    sram.ifmap_reads = trace(kTraceKinds[0]);
    sram.filter_reads = trace(kTraceKinds[1]);
    sram.ofmap_writes = trace(kTraceKinds[2]);
    try {
      const auto traffic = summarize_traffic(sram, trace(kTraceKinds[3]), trace(kTraceKinds[4]));
      reports.push_back(make_layer_report(l, arch, traffic, table));
    } catch (const Error&) {
      rethrow_for_layer(l.name);
    }
  }
  write_reports(run_dir, reports);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cycle-accurate systolic array simulator", "systolic-sim"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "simulate every layer of a topology");
  run_cmd->add_option("--config", run.config, "architecture config file")->required();
  run_cmd->add_option("--topology", run.topology, "topology CSV (overrides the config's Topology)");
  run_cmd->add_option("--out", run.out, std::string("output root (default $") + kOutEnvVar + " or ./runs)");
  run_cmd->add_option("--energy-table", run.energy_table, "energy cost table file");
  run_cmd->add_option("--run-id", run.run_id, "name of the run directory");
  run_cmd->add_flag("--no-traces", run.no_traces, "write summaries only");
  run_cmd->add_option("--jobs", run.jobs, "parallel layers (default: hardware threads)");
  add_overrides(run_cmd, run.overrides);

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "run one design-space study");
  sweep_cmd->add_option("study", sweep.study, "dataflow, memory, aspect or scale")->required();
  sweep_cmd->add_option("--workload", sweep.workloads, "topology CSV (repeatable)")->required();
  sweep_cmd->add_option("--config", sweep.config, "base architecture config");
  sweep_cmd->add_option("--out", sweep.out, "output directory");
  sweep_cmd->add_option("--energy-table", sweep.energy_table, "energy cost table file");
  sweep_cmd->add_option("--sizes", sweep.sizes, "square array sides (dataflow study)");
  sweep_cmd->add_option("--sram-sizes", sweep.sram_sizes, "buffer sizes in KB (memory study)");
  sweep_cmd->add_option("--total-pes", sweep.total_pes, "PE budget (aspect study)");
  sweep_cmd->add_option("--ladder", sweep.ladder, "PE counts (scale study)");
  sweep_cmd->add_option("--dataflows", sweep.dataflows, "restrict to these dataflows");
  sweep_cmd->add_option("--jobs", sweep.jobs, "parallel cells (default: hardware threads)");
  add_overrides(sweep_cmd, sweep.overrides);

  std::string report_dir;
  auto* report_cmd = app.add_subcommand("report", "recompute summaries from a run's traces");
  report_cmd->add_option("run_dir", report_dir, "run directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << "run with --help for usage\n";
    return kUsage;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run, out);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep, out);
    return cmd_report(report_dir, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const TopologyError& e) {
    err << "topology error: " << e.what() << '\n';
    return kTopologyError;
  } catch (const SimulationError& e) {
    err << "simulation error: " << e.what() << '\n';
    return kSimulationError;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  }
}

}  // namespace systolic::cli
