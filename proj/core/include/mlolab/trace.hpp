#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlolab {

using Micros = std::uint64_t;

// Channel occupancy is sampled at a fixed 10 us period; one archived record
// covers exactly one second of a 5 GHz channel.
inline constexpr Micros kSamplePeriodUs = 10;
inline constexpr std::size_t kSamplesPerRecord = 100000;

// Raw RSSI record: one dBm value per 10 us sample.
struct RssiTrace {
  std::vector<double> samples_dbm;
  std::uint32_t sample_period_us = static_cast<std::uint32_t>(kSamplePeriodUs);
  std::string channel_label;
};

inline constexpr double kDefaultThresholdDbm = -82.0;

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_number(line) {}
  std::size_t line_number;
};

// Busy/idle timeline at 10 us resolution, immutable once constructed.
// Construction also builds a run-length index of the busy stretches so that
// interval queries cost one binary search instead of a sample walk; the
// backoff scanner leans on this heavily.
class OccupancyTrace {
 public:
  struct BusyRun {
    Micros start_us;
    Micros end_us;  // exclusive, sample aligned
  };

  explicit OccupancyTrace(std::vector<std::uint8_t> busy, std::string label = {});

  static OccupancyTrace all_idle(Micros duration_us, std::string label = {});
  static OccupancyTrace all_busy(Micros duration_us, std::string label = {});

  std::size_t sample_count() const { return busy_.size(); }
  Micros duration_us() const { return busy_.size() * kSamplePeriodUs; }
  bool busy_at_sample(std::size_t i) const { return busy_[i] != 0; }
  std::size_t busy_sample_count() const { return busy_count_; }
  double occupancy() const {
    return static_cast<double>(busy_count_) / static_cast<double>(busy_.size());
  }
  const std::string& label() const { return label_; }
  const std::vector<BusyRun>& busy_runs() const { return runs_; }

  // True when every sample overlapping [t_start, t_end) is idle; the empty
  // interval is idle. Throws std::out_of_range unless
  // 0 <= t_start <= t_end <= duration_us().
  bool is_idle(Micros t_start_us, Micros t_end_us) const;

  // Earliest busy run with samples overlapping [t0, t1), if any. Bounds are
  // clamped to the trace, the empty interval overlaps nothing.
  std::optional<BusyRun> first_busy_run_overlapping(Micros t0_us, Micros t1_us) const;

  bool operator==(const OccupancyTrace& other) const { return busy_ == other.busy_; }

 private:
  std::vector<std::uint8_t> busy_;
  std::vector<BusyRun> runs_;
  std::size_t busy_count_ = 0;
  std::string label_;
};

using TracePtr = std::shared_ptr<const OccupancyTrace>;

// Occupancy decile bin. Label L in {10,...,90} percent holds traces whose
// busy fraction lies in the half open window [L-5, L+5) percent.
struct OccupancyBin {
  int label_pct = 0;
  std::vector<TracePtr> members;
};

struct BinningResult {
  std::map<int, OccupancyBin> bins;
  std::vector<TracePtr> unbinned;  // occupancy below 5% or at/above 95%
};

enum class BurstDistribution { Exponential, Fixed };

// Alternating busy/idle renewal process. The idle burst mean is tied to the
// busy mean by the target occupancy, so only the busy mean is configurable.
struct SynthTraceParams {
  double target_occupancy = 0.5;  // fraction in (0, 1)
  double mean_busy_us = 2000.0;
  BurstDistribution burst_distribution = BurstDistribution::Exponential;
  Micros duration_us = 1000000;

  double mean_idle_us() const {
    return mean_busy_us * (1.0 - target_occupancy) / target_occupancy;
  }
};

// Parses CSV records of RSSI samples, one record per line, header lines
// starting with '#' skipped. Every record must carry exactly
// kSamplesPerRecord values; violations raise TraceParseError naming the
// 1-based line number.
std::vector<RssiTrace> parse_rssi_trace(std::istream& in,
                                        const std::string& channel_label);

// busy[i] = samples[i] >= threshold. Threshold must be finite.
OccupancyTrace to_occupancy(const RssiTrace& trace, double threshold_dbm);

// Decile label for a busy count, or nullopt when outside [5%, 95%).
// Exact integer arithmetic, no floating point on the bin edges.
std::optional<int> bin_label_for(std::uint64_t busy_samples,
                                 std::uint64_t total_samples);

BinningResult bin_traces(const std::vector<TracePtr>& traces);

// Deterministic for a given seed. Burst boundaries are laid out on a
// continuous time axis and then snapped to the 10 us sample grid, which
// keeps the long run busy fraction unbiased.
OccupancyTrace synthesize_onoff(const SynthTraceParams& params, std::uint64_t seed);

// Writes one CSV record on a single line: busy samples as threshold+10 dBm,
// idle samples as threshold-10 dBm.
void write_trace_csv(std::ostream& out, const OccupancyTrace& trace,
                     double threshold_dbm);

}  // namespace mlolab
