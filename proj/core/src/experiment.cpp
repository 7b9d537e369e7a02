#include "mlolab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "mlolab/dcf.hpp"
#include "mlolab/rng.hpp"

namespace mlolab {

namespace {

// Seed derivation tags; each purpose gets its own branch of the master seed.
enum SeedTag : std::uint64_t {
  kTagSynthTrace = 1,
  kTagPickPrimary = 2,
  kTagPickSecondary = 3,
  kTagSchedule = 4,
  kTagBackoff = 5,
  kTagTiebreak = 6,
  kTagCalibration = 7,
};

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= value.size()) {
    const std::size_t comma = value.find(',', start);
    const std::string item =
        trim(value.substr(start, comma == std::string::npos ? std::string::npos
                                                            : comma - start));
    if (!item.empty()) items.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return items;
}

[[noreturn]] void spec_error(std::size_t line, const std::string& what) {
  throw std::runtime_error("spec line " + std::to_string(line) + ": " + what);
}

long parse_long(const std::string& s, std::size_t line) {
  long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    spec_error(line, "expected an integer, got '" + s + "'");
  }
  return v;
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    spec_error(line, "expected a number, got '" + s + "'");
  }
  return v;
}

void set_u32(std::uint32_t& field, const std::string& s, std::size_t line) {
  const long v = parse_long(s, line);
  if (v < 0) spec_error(line, "value must be non-negative");
  field = static_cast<std::uint32_t>(v);
}

}  // namespace

ExperimentSpec parse_spec(std::istream& in) {
  ExperimentSpec spec;
  std::string line;
  std::size_t line_no = 0;
  bool modes_set = false, loads_set = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      spec_error(line_no, "expected 'key = value'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) spec_error(line_no, "empty key");
    if (value.empty()) spec_error(line_no, "empty value for '" + key + "'");

    if (key == "modes") {
      spec.modes.clear();
      for (const std::string& item : split_list(value)) {
        const auto mode = parse_access_mode(item);
        if (!mode) spec_error(line_no, "unknown mode '" + item + "'");
        spec.modes.push_back(*mode);
      }
      modes_set = true;
    } else if (key == "bin_pairs") {
      spec.bin_pairs.clear();
      for (const std::string& item : split_list(value)) {
        const std::size_t colon = item.find(':');
        if (colon == std::string::npos) {
          spec_error(line_no, "bin pair '" + item + "' must look like 10:40");
        }
        const int p = static_cast<int>(
            parse_long(trim(item.substr(0, colon)), line_no));
        const int s = static_cast<int>(
            parse_long(trim(item.substr(colon + 1)), line_no));
        spec.bin_pairs.emplace_back(p, s);
      }
    } else if (key == "loads") {
      spec.loads.clear();
      for (const std::string& item : split_list(value)) {
        const double load = parse_double(item, line_no);
        if (load <= 0.0 || load > 1.0) {
          spec_error(line_no, "load must lie in (0, 1]");
        }
        spec.loads.push_back(load);
      }
      loads_set = true;
    } else if (key == "runs_per_point") {
      set_u32(spec.runs_per_point, value, line_no);
    } else if (key == "master_seed") {
      spec.master_seed = static_cast<std::uint64_t>(parse_long(value, line_no));
    } else if (key == "trace_source") {
      if (value == "synthetic") {
        spec.trace_source = TraceSource::Synthetic;
      } else if (value == "dataset") {
        spec.trace_source = TraceSource::Dataset;
      } else {
        spec_error(line_no, "trace_source must be synthetic or dataset");
      }
    } else if (key == "dataset_path") {
      spec.dataset_paths = split_list(value);
    } else if (key == "threshold_dbm") {
      spec.threshold_dbm = parse_double(value, line_no);
    } else if (key == "synth_mean_busy_us") {
      spec.synth_mean_busy_us = parse_double(value, line_no);
    } else if (key == "synth_traces_per_bin") {
      set_u32(spec.synth_traces_per_bin, value, line_no);
    } else if (key == "synth_distribution") {
      if (value == "exponential") {
        spec.synth_distribution = BurstDistribution::Exponential;
      } else if (value == "fixed") {
        spec.synth_distribution = BurstDistribution::Fixed;
      } else {
        spec_error(line_no, "synth_distribution must be exponential or fixed");
      }
    } else if (key == "output") {
      spec.output_path = value;
    } else if (key == "queue_capacity") {
      const long v = parse_long(value, line_no);
      if (v <= 0) spec_error(line_no, "queue_capacity must be positive");
      spec.queue_capacity = static_cast<std::size_t>(v);
    } else if (key == "cw") {
      set_u32(spec.cw, value, line_no);
    } else if (key == "str_allocation") {
      if (value == "random") {
        spec.str_allocation = StrAllocation::Random;
      } else if (value == "prefer-idle-channel") {
        spec.str_allocation = StrAllocation::PreferIdleChannel;
      } else {
        spec_error(line_no, "str_allocation must be random or prefer-idle-channel");
      }
    } else if (key == "coupling") {
      if (value == "coupled") {
        spec.couple_backoffs = true;
      } else if (value == "independent") {
        spec.couple_backoffs = false;
      } else {
        spec_error(line_no, "coupling must be coupled or independent");
      }
    } else if (key == "t_phy_legacy_us") {
      set_u32(spec.phy.t_phy_legacy_us, value, line_no);
    } else if (key == "t_phy_he_su_us") {
      set_u32(spec.phy.t_phy_he_su_us, value, line_no);
    } else if (key == "sigma_us") {
      set_u32(spec.phy.sigma_us, value, line_no);
    } else if (key == "sigma_legacy_us") {
      set_u32(spec.phy.sigma_legacy_us, value, line_no);
    } else if (key == "sifs_us") {
      set_u32(spec.phy.sifs_us, value, line_no);
    } else if (key == "difs_us") {
      set_u32(spec.phy.difs_us, value, line_no);
    } else if (key == "slot_us") {
      set_u32(spec.phy.slot_us, value, line_no);
    } else if (key == "l_sf_bits") {
      set_u32(spec.phy.l_sf_bits, value, line_no);
    } else if (key == "l_mh_bits") {
      set_u32(spec.phy.l_mh_bits, value, line_no);
    } else if (key == "l_tb_bits") {
      set_u32(spec.phy.l_tb_bits, value, line_no);
    } else if (key == "l_ack_bits") {
      set_u32(spec.phy.l_ack_bits, value, line_no);
    } else if (key == "l_frame_bits") {
      set_u32(spec.phy.l_frame_bits, value, line_no);
    } else if (key == "data_bits_per_symbol") {
      set_u32(spec.mcs.data_bits_per_symbol, value, line_no);
    } else if (key == "legacy_bits_per_symbol") {
      set_u32(spec.mcs.legacy_bits_per_symbol, value, line_no);
    } else if (key == "secondary_data_bits_per_symbol") {
      McsConfig mcs = spec.mcs_secondary.value_or(spec.mcs);
      set_u32(mcs.data_bits_per_symbol, value, line_no);
      spec.mcs_secondary = mcs;
    } else {
      spec_error(line_no, "unknown key '" + key + "'");
    }
  }
  (void)modes_set;
  (void)loads_set;
  if (spec.bin_pairs.empty()) {
    throw std::runtime_error("spec: bin_pairs must list at least one pair");
  }
  validate(spec.phy);
  validate(spec.mcs);
  if (spec.mcs_secondary) validate(*spec.mcs_secondary);
  if (spec.cw == 0) throw std::runtime_error("spec: cw must be positive");
  return spec;
}

ExperimentSpec parse_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open spec file '" + path + "'");
  }
  return parse_spec(in);
}

namespace {

// Occupancy window check for bin membership, exact in integers.
bool fits_bin(const OccupancyTrace& trace, int label) {
  if (label == 0) return trace.busy_sample_count() == 0;
  const std::uint64_t busy = trace.busy_sample_count();
  const std::uint64_t n = trace.sample_count();
  const std::uint64_t lo = static_cast<std::uint64_t>(label - 5) * n;
  const std::uint64_t hi = static_cast<std::uint64_t>(label + 5) * n;
  return lo <= 100 * busy && 100 * busy < hi;
}

std::vector<TracePtr> synth_bin_members(const ExperimentSpec& spec, int label) {
  std::vector<TracePtr> members;
  members.reserve(spec.synth_traces_per_bin);
  for (std::uint32_t i = 0; i < spec.synth_traces_per_bin; ++i) {
    if (label == 0) {
      members.push_back(std::make_shared<OccupancyTrace>(
          OccupancyTrace::all_idle(1000000)));
      continue;
    }
    SynthTraceParams params;
    params.target_occupancy = label / 100.0;
    params.mean_busy_us = spec.synth_mean_busy_us;
    params.burst_distribution = spec.synth_distribution;
    params.duration_us = 1000000;
    // Re-draw until the realized busy fraction actually sits inside the
    // half-open bin window; members must honor the label they are filed under.
    bool placed = false;
    for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
      const std::uint64_t seed = derive_seed(
          spec.master_seed,
          {kTagSynthTrace, static_cast<std::uint64_t>(label), i, attempt});
      OccupancyTrace trace = synthesize_onoff(params, seed);
      if (fits_bin(trace, label)) {
        members.push_back(std::make_shared<OccupancyTrace>(std::move(trace)));
        placed = true;
        break;
      }
    }
    if (!placed) {
      throw std::runtime_error(
          "synthetic generator failed to land in the " + std::to_string(label) +
          "% bin; adjust synth_mean_busy_us");
    }
  }
  return members;
}

std::vector<TracePtr> dataset_bin(const ExperimentSpec& spec) {
  std::vector<std::filesystem::path> files;
  for (const std::string& path : spec.dataset_paths) {
    if (std::filesystem::is_directory(path)) {
      for (const auto& entry :
           std::filesystem::recursive_directory_iterator(path)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") {
          files.push_back(entry.path());
        }
      }
    } else if (std::filesystem::is_regular_file(path)) {
      files.emplace_back(path);
    } else {
      throw std::runtime_error("dataset path '" + path + "' does not exist");
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<TracePtr> traces;
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open trace file '" + file.string() + "'");
    for (RssiTrace& raw : parse_rssi_trace(in, file.filename().string())) {
      traces.push_back(std::make_shared<OccupancyTrace>(
          to_occupancy(raw, spec.threshold_dbm)));
    }
  }
  return traces;
}

}  // namespace

BinMap resolve_trace_bins(const ExperimentSpec& spec,
                          const std::vector<int>& labels) {
  BinMap bins;
  if (spec.trace_source == TraceSource::Synthetic) {
    for (int label : labels) {
      if (!bins.count(label)) bins[label] = synth_bin_members(spec, label);
    }
    return bins;
  }
  const BinningResult binned = bin_traces(dataset_bin(spec));
  for (int label : labels) {
    const auto it = binned.bins.find(label);
    if (it == binned.bins.end() || it->second.members.empty()) {
      throw std::runtime_error("dataset has no traces in the " +
                               std::to_string(label) + "% occupancy bin");
    }
    bins[label] = it->second.members;
  }
  return bins;
}

namespace {

SimConfig base_config(const ExperimentSpec& spec) {
  SimConfig config;
  config.phy = spec.phy;
  config.mcs = spec.mcs;
  config.mcs_secondary = spec.mcs_secondary;
  config.cw = spec.cw;
  config.queue_capacity = spec.queue_capacity;
  config.str_allocation = spec.str_allocation;
  return config;
}

}  // namespace

double calibrate_bin(const ExperimentSpec& spec, const BinMap& bins, int label) {
  const auto it = bins.find(label);
  if (it == bins.end() || it->second.empty()) {
    throw std::runtime_error("empty bin " + std::to_string(label));
  }
  // Cap the averaging set so huge dataset bins stay cheap; the subsample is
  // seeded, so calibration stays deterministic.
  std::vector<TracePtr> members = it->second;
  constexpr std::size_t kCalibrationCap = 200;
  if (members.size() > kCalibrationCap) {
    RngStream rng(derive_seed(spec.master_seed,
                              {kTagCalibration, static_cast<std::uint64_t>(label)}));
    std::vector<TracePtr> sampled;
    sampled.reserve(kCalibrationCap);
    for (std::size_t i = 0; i < kCalibrationCap; ++i) {
      sampled.push_back(members[rng.uniform_int(members.size())]);
    }
    members = std::move(sampled);
  }
  std::vector<std::pair<TracePtr, TracePtr>> pairs;
  pairs.reserve(members.size());
  for (const TracePtr& t : members) pairs.emplace_back(t, nullptr);
  return full_buffer_throughput(AccessMode::Slo, base_config(spec), pairs);
}

int thread_budget() {
  int budget = 0;
  if (const char* env = std::getenv(kThreadsEnvVar)) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 0) budget = static_cast<int>(v);
  }
  if (budget == 0) {
    budget = static_cast<int>(std::thread::hardware_concurrency());
  }
  return budget > 0 ? budget : 1;
}

namespace {

// Runs fn(0..count-1) across the thread budget. Results must go to
// preallocated slots so aggregation order never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, const Fn& fn) {
  const int budget = std::min<int>(thread_budget(), static_cast<int>(count));
  if (budget <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  workers.reserve(budget);
  std::exception_ptr error;
  std::mutex error_mu;
  for (int w = 0; w < budget; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::vector<DelaySummary> run_experiment(const ExperimentSpec& spec) {
  std::set<int> label_set;
  for (const auto& [p, s] : spec.bin_pairs) {
    label_set.insert(p);
    label_set.insert(s);
  }
  const BinMap bins =
      resolve_trace_bins(spec, {label_set.begin(), label_set.end()});

  std::map<int, double> saturation_cache;
  const auto saturation_bps = [&](int label) {
    auto it = saturation_cache.find(label);
    if (it == saturation_cache.end()) {
      it = saturation_cache.emplace(label, calibrate_bin(spec, bins, label)).first;
    }
    return it->second;
  };

  const SimConfig base = base_config(spec);
  std::vector<DelaySummary> rows;

  for (std::size_t pi = 0; pi < spec.bin_pairs.size(); ++pi) {
    const auto [p_label, s_label] = spec.bin_pairs[pi];
    const std::vector<TracePtr>& p_bin = bins.at(p_label);
    const std::vector<TracePtr>& s_bin = bins.at(s_label);
    const double sat_bps = saturation_bps(p_label);

    for (std::size_t li = 0; li < spec.loads.size(); ++li) {
      const double load = spec.loads[li];
      const double rate =
          load * sat_bps / static_cast<double>(spec.phy.l_frame_bits);

      // One slot per (run, mode); every mode replays identical arrivals.
      std::vector<std::map<AccessMode, RunResult>> slots(spec.runs_per_point);
      parallel_for(spec.runs_per_point, [&](std::size_t r) {
        const auto sub = [&](std::uint64_t tag) {
          return derive_seed(spec.master_seed, {tag, pi, li, r});
        };
        RngStream pick_p(sub(kTagPickPrimary));
        RngStream pick_s(sub(kTagPickSecondary));
        const TracePtr primary = p_bin[pick_p.uniform_int(p_bin.size())];
        const TracePtr secondary = s_bin[pick_s.uniform_int(s_bin.size())];
        const ArrivalSchedule schedule = gen_poisson_arrivals(
            rate, primary->duration_us(), sub(kTagSchedule), spec.phy.l_frame_bits);
        SimConfig config = base;
        config.backoff_seed = sub(kTagBackoff);
        config.tiebreak_seed = sub(kTagTiebreak);
        slots[r] = compare_modes(primary, secondary, schedule, config,
                                 spec.modes, spec.couple_backoffs);
      });

      for (AccessMode mode : spec.modes) {
        std::vector<RunResult> results;
        results.reserve(slots.size());
        for (auto& slot : slots) results.push_back(slot.at(mode));
        const std::size_t total = results.size();
        std::vector<RunResult> retained = filter_saturated(std::move(results));

        DelaySummary row;
        row.mode = mode;
        row.primary_bin_pct = p_label;
        row.secondary_bin_pct = s_label;
        row.load_fraction = load;
        row.runs_retained = static_cast<std::uint32_t>(retained.size());
        row.runs_discarded = static_cast<std::uint32_t>(total - retained.size());

        std::vector<Micros> pooled;
        std::uint64_t bits = 0;
        Micros span_us = 0;
        for (const RunResult& r : retained) {
          for (const PacketRecord& rec : r.records) pooled.push_back(rec.delay_us);
          bits += r.delivered_bits;
          span_us += kSamplesPerRecord * kSamplePeriodUs;
        }
        row.n_packets = pooled.size();
        if (!pooled.empty()) {
          const SummaryStats stats = summarize(std::move(pooled));
          row.mean_delay_us = stats.mean_delay_us;
          row.p95_delay_us = stats.p95_delay_us;
        }
        if (span_us > 0) {
          // bits per microsecond is numerically megabits per second.
          row.throughput_mbps =
              static_cast<double>(bits) / static_cast<double>(span_us);
        }
        row.warning = retained.empty();
        rows.push_back(row);
      }
    }
  }
  return rows;
}

namespace {

void append_csv_number(std::string& out, const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  out += buf;
}

}  // namespace

std::string render_csv(const std::vector<DelaySummary>& rows) {
  std::string out =
      "mode,primary_bin,secondary_bin,load,runs_retained,runs_discarded,"
      "n_packets,mean_delay_us,p95_delay_us,throughput_mbps\n";
  for (const DelaySummary& row : rows) {
    out += to_string(row.mode);
    out += ',';
    out += std::to_string(row.primary_bin_pct);
    out += ',';
    if (row.secondary_bin_pct) out += std::to_string(*row.secondary_bin_pct);
    out += ',';
    append_csv_number(out, "%g", row.load_fraction);
    out += ',';
    out += std::to_string(row.runs_retained);
    out += ',';
    out += std::to_string(row.runs_discarded);
    out += ',';
    out += std::to_string(row.n_packets);
    out += ',';
    if (row.mean_delay_us) append_csv_number(out, "%.3f", *row.mean_delay_us);
    out += ',';
    if (row.p95_delay_us) append_csv_number(out, "%.3f", *row.p95_delay_us);
    out += ',';
    append_csv_number(out, "%.4f", row.throughput_mbps);
    out += '\n';
  }
  return out;
}

void write_csv(std::ostream& out, const std::vector<DelaySummary>& rows) {
  out << render_csv(rows);
}

void write_csv_file_atomic(const std::string& path,
                           const std::vector<DelaySummary>& rows) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out << render_csv(rows);
    if (!out.flush()) throw std::runtime_error("write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::string render_bin_manifest(
    const std::vector<std::pair<std::string, TracePtr>>& traces) {
  std::string out;
  for (const auto& [path, trace] : traces) {
    const auto label =
        bin_label_for(trace->busy_sample_count(), trace->sample_count());
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", trace->occupancy());
    out += path;
    out += ',';
    out += buf;
    out += ',';
    out += label ? std::to_string(*label) : std::string("none");
    out += '\n';
  }
  return out;
}

}  // namespace mlolab
