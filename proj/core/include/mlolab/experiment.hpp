#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mlolab/access.hpp"
#include "mlolab/phy.hpp"
#include "mlolab/sim.hpp"
#include "mlolab/stats.hpp"
#include "mlolab/trace.hpp"

namespace mlolab {

// Caps the number of worker threads used to dispatch independent runs;
// unset or "0" means one thread per hardware core.
inline constexpr const char* kThreadsEnvVar = "MLO_LAB_THREADS";

enum class TraceSource { Synthetic, Dataset };

// Experiment description, normally loaded from a "key = value" spec file.
// See parse_spec() for the recognized keys.
struct ExperimentSpec {
  std::vector<AccessMode> modes{AccessMode::Slo, AccessMode::Str,
                                AccessMode::Nstr, AccessMode::StrPlus};
  std::vector<std::pair<int, int>> bin_pairs;  // primary:secondary percent labels
  std::vector<double> loads{0.2, 0.4, 0.6, 0.8};
  std::uint32_t runs_per_point = 100;
  std::uint64_t master_seed = 1;

  TraceSource trace_source = TraceSource::Synthetic;
  std::vector<std::string> dataset_paths;
  double threshold_dbm = kDefaultThresholdDbm;
  double synth_mean_busy_us = 2000.0;
  std::uint32_t synth_traces_per_bin = 100;
  BurstDistribution synth_distribution = BurstDistribution::Exponential;

  std::string output_path = "results.csv";

  PhyParams phy{};
  McsConfig mcs{};
  std::optional<McsConfig> mcs_secondary;
  std::uint32_t cw = kDefaultCw;
  std::size_t queue_capacity = 10000;
  StrAllocation str_allocation = StrAllocation::Random;
  bool couple_backoffs = true;
};

ExperimentSpec parse_spec(std::istream& in);
ExperimentSpec parse_spec_file(const std::string& path);

// Occupancy label -> traces. Label 0 is the synthetic all-idle bin used for
// calibration; dataset sources only ever populate labels 10..90.
using BinMap = std::map<int, std::vector<TracePtr>>;

// Synthetic bins are generated to order (members re-drawn until their
// empirical occupancy fits the bin window); dataset bins come from parsing
// and binning every record under the configured threshold.
BinMap resolve_trace_bins(const ExperimentSpec& spec,
                          const std::vector<int>& labels);

// SLO saturation throughput for one bin, bits per second.
double calibrate_bin(const ExperimentSpec& spec, const BinMap& bins, int label);

// The full grid: for every (bin pair, load) cell, draw trace pairs, generate
// Poisson arrivals at load x the primary bin's SLO saturation rate, run every
// mode on identical arrivals, discard non-95% runs and pool the rest.
// Row order: pairs x loads x modes as listed in the spec.
std::vector<DelaySummary> run_experiment(const ExperimentSpec& spec);

std::string render_csv(const std::vector<DelaySummary>& rows);
void write_csv(std::ostream& out, const std::vector<DelaySummary>& rows);

// Writes to "<path>.tmp" and renames, so readers never observe a torn file.
void write_csv_file_atomic(const std::string& path,
                           const std::vector<DelaySummary>& rows);

// Lines of "path,occupancy_fraction,bin_pct"; unbinned traces say "none".
std::string render_bin_manifest(
    const std::vector<std::pair<std::string, TracePtr>>& traces);

int thread_budget();  // resolves kThreadsEnvVar

}  // namespace mlolab
