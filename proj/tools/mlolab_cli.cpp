// mlolab command line front end: trace binning, synthetic trace generation,
// saturation calibration, and full experiment runs driven by a spec file.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "mlolab/experiment.hpp"
#include "mlolab/rng.hpp"
#include "mlolab/sim.hpp"
#include "mlolab/trace.hpp"

namespace {

using namespace mlolab;

int cmd_bin(const std::vector<std::string>& files, double threshold,
            const std::string& out_path) {
  std::vector<std::pair<std::string, TracePtr>> traces;
  for (const std::string& file : files) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open '" + file + "'");
    std::size_t record = 0;
    for (RssiTrace& raw : parse_rssi_trace(in, file)) {
      std::string label = file;
      if (record > 0) label += "#" + std::to_string(record);
      traces.emplace_back(std::move(label), std::make_shared<OccupancyTrace>(
                                                to_occupancy(raw, threshold)));
      ++record;
    }
  }
  const std::string manifest = render_bin_manifest(traces);
  if (out_path.empty()) {
    std::cout << manifest;
  } else {
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
    out << manifest;
  }
  return 0;
}

int cmd_synth(double occupancy, double mean_busy_us, unsigned n,
              std::uint64_t seed, const std::string& out_dir,
              const std::string& distribution, double threshold) {
  SynthTraceParams params;
  params.target_occupancy = occupancy;
  params.mean_busy_us = mean_busy_us;
  params.burst_distribution = distribution == "fixed"
                                  ? BurstDistribution::Fixed
                                  : BurstDistribution::Exponential;
  std::filesystem::create_directories(out_dir);

  // Emit only traces whose realized occupancy lands in the +/-5 point bin
  // window around the request, so downstream binning files them as asked.
  const int label = static_cast<int>(occupancy * 100.0 + 0.5);
  for (unsigned i = 0; i < n; ++i) {
    OccupancyTrace trace = OccupancyTrace::all_idle(params.duration_us);
    bool placed = false;
    for (std::uint64_t attempt = 0; attempt < 100 && !placed; ++attempt) {
      trace = synthesize_onoff(params, derive_seed(seed, {i, attempt}));
      const long long diff =
          100LL * static_cast<long long>(trace.busy_sample_count()) -
          static_cast<long long>(label) *
              static_cast<long long>(trace.sample_count());
      placed = -5LL * static_cast<long long>(trace.sample_count()) <= diff &&
               diff < 5LL * static_cast<long long>(trace.sample_count());
    }
    if (!placed) {
      throw std::runtime_error(
          "could not realize the requested occupancy; try a shorter mean burst");
    }
    char name[32];
    std::snprintf(name, sizeof name, "trace_%03u.csv", i);
    const std::filesystem::path path = std::filesystem::path(out_dir) / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    write_trace_csv(out, trace, threshold);
  }
  std::cout << "wrote " << n << " traces to " << out_dir << "\n";
  return 0;
}

int cmd_calibrate(const std::string& spec_path, int bin_label) {
  const ExperimentSpec spec = parse_spec_file(spec_path);
  const BinMap bins = resolve_trace_bins(spec, {bin_label});
  const double bps = calibrate_bin(spec, bins, bin_label);
  std::printf("SLO full-buffer throughput, bin %d: %.4f Mbps\n", bin_label,
              bps / 1e6);
  return 0;
}

int cmd_run(const std::string& spec_path) {
  const ExperimentSpec spec = parse_spec_file(spec_path);
  const std::vector<DelaySummary> rows = run_experiment(spec);
  write_csv_file_atomic(spec.output_path, rows);
  std::size_t warnings = 0;
  for (const DelaySummary& row : rows) warnings += row.warning ? 1 : 0;
  std::cout << "wrote " << rows.size() << " rows to " << spec.output_path;
  if (warnings > 0) {
    std::cout << " (" << warnings << " rows had every run discarded)";
  }
  std::cout << "\n";
  return 0;
}

int cmd_sweep(const std::string& spec_path) {
  ExperimentSpec spec = parse_spec_file(spec_path);
  spec.bin_pairs = {{10, 10}, {40, 40}, {70, 70}, {10, 40}, {10, 70}, {40, 70}};
  spec.loads = {0.2, 0.4, 0.6, 0.8};
  spec.modes = {AccessMode::Slo, AccessMode::Str, AccessMode::Nstr,
                AccessMode::StrPlus};
  const std::vector<DelaySummary> rows = run_experiment(spec);
  write_csv_file_atomic(spec.output_path, rows);
  std::cout << "wrote " << rows.size() << " rows to " << spec.output_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mlolab: multi-link Wi-Fi latency simulator"};
  app.require_subcommand(1);

  auto* bin = app.add_subcommand(
      "bin", "Bin RSSI trace files by occupancy and print a manifest");
  std::vector<std::string> bin_files;
  double bin_threshold = kDefaultThresholdDbm;
  std::string bin_out;
  bin->add_option("files", bin_files, "RSSI trace CSV files")->required();
  bin->add_option("--threshold", bin_threshold, "busy threshold in dBm");
  bin->add_option("--out", bin_out, "manifest output path (default: stdout)");

  auto* synth = app.add_subcommand("synth", "Generate synthetic on/off traces");
  double synth_occ = 0.4, synth_busy = 2000.0, synth_threshold = kDefaultThresholdDbm;
  unsigned synth_n = 100;
  std::uint64_t synth_seed = 1;
  std::string synth_dir = "traces", synth_dist = "exponential";
  synth->add_option("--occupancy", synth_occ, "target busy fraction (0,1)")
      ->required();
  synth->add_option("--mean-busy-us", synth_busy, "mean busy burst length");
  synth->add_option("--n", synth_n, "number of traces");
  synth->add_option("--seed", synth_seed, "master seed");
  synth->add_option("--out-dir", synth_dir, "output directory");
  synth->add_option("--distribution", synth_dist, "exponential or fixed")
      ->check(CLI::IsMember({"exponential", "fixed"}));
  synth->add_option("--threshold", synth_threshold,
                    "busy threshold the written RSSI values straddle");

  auto* calibrate = app.add_subcommand(
      "calibrate", "Print single-link saturation throughput for one bin");
  std::string cal_spec;
  int cal_bin = 0;
  calibrate->add_option("spec", cal_spec, "experiment spec file")->required();
  calibrate->add_option("--bin", cal_bin, "occupancy bin percent (0 = idle)");

  auto* run = app.add_subcommand("run", "Run the experiment grid in a spec file");
  std::string run_spec;
  run->add_option("spec", run_spec, "experiment spec file")->required();

  auto* sweep = app.add_subcommand(
      "sweep", "Run the full default grid (all pairs, loads, modes)");
  std::string sweep_spec;
  sweep->add_option("spec", sweep_spec, "experiment spec file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (bin->parsed()) return cmd_bin(bin_files, bin_threshold, bin_out);
    if (synth->parsed()) {
      return cmd_synth(synth_occ, synth_busy, synth_n, synth_seed, synth_dir,
                       synth_dist, synth_threshold);
    }
    if (calibrate->parsed()) return cmd_calibrate(cal_spec, cal_bin);
    if (run->parsed()) return cmd_run(run_spec);
    if (sweep->parsed()) return cmd_sweep(sweep_spec);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
