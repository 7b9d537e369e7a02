#include "mlolab/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include "mlolab/rng.hpp"

namespace mlolab {

OccupancyTrace::OccupancyTrace(std::vector<std::uint8_t> busy, std::string label)
    : busy_(std::move(busy)), label_(std::move(label)) {
  if (busy_.empty()) {
    throw std::invalid_argument("OccupancyTrace: empty sample vector");
  }
  for (std::size_t i = 0; i < busy_.size();) {
    if (!busy_[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < busy_.size() && busy_[j]) ++j;
    runs_.push_back({i * kSamplePeriodUs, j * kSamplePeriodUs});
    busy_count_ += j - i;
    i = j;
  }
}

OccupancyTrace OccupancyTrace::all_idle(Micros duration_us, std::string label) {
  return OccupancyTrace(
      std::vector<std::uint8_t>(duration_us / kSamplePeriodUs, 0), std::move(label));
}

OccupancyTrace OccupancyTrace::all_busy(Micros duration_us, std::string label) {
  return OccupancyTrace(
      std::vector<std::uint8_t>(duration_us / kSamplePeriodUs, 1), std::move(label));
}

bool OccupancyTrace::is_idle(Micros t_start_us, Micros t_end_us) const {
  if (t_start_us > t_end_us || t_end_us > duration_us()) {
    throw std::out_of_range("is_idle: interval outside trace");
  }
  return !first_busy_run_overlapping(t_start_us, t_end_us).has_value();
}

std::optional<OccupancyTrace::BusyRun> OccupancyTrace::first_busy_run_overlapping(
    Micros t0_us, Micros t1_us) const {
  if (t0_us >= t1_us) return std::nullopt;
  // Widen to the samples the interval touches; channel state is constant
  // inside a sample.
  const Micros lo = (t0_us / kSamplePeriodUs) * kSamplePeriodUs;
  const Micros hi =
      ((t1_us + kSamplePeriodUs - 1) / kSamplePeriodUs) * kSamplePeriodUs;
  auto it = std::upper_bound(runs_.begin(), runs_.end(), lo,
                             [](Micros t, const BusyRun& r) { return t < r.end_us; });
  if (it == runs_.end() || it->start_us >= hi) return std::nullopt;
  return *it;
}

std::vector<RssiTrace> parse_rssi_trace(std::istream& in,
                                        const std::string& channel_label) {
  std::vector<RssiTrace> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;

    RssiTrace trace;
    trace.channel_label = channel_label;
    trace.samples_dbm.reserve(kSamplesPerRecord);
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
      const char* field_end = std::find(p, end, ',');
      // Tolerate surrounding blanks, reject anything else non numeric.
      const char* a = p;
      const char* b = field_end;
      while (a < b && (*a == ' ' || *a == '\t')) ++a;
      while (b > a && (b[-1] == ' ' || b[-1] == '\t')) --b;
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(a, b, value);
      if (ec != std::errc() || ptr != b || a == b) {
        throw TraceParseError(line_no, "invalid RSSI value '" +
                                           std::string(p, field_end) + "'");
      }
      trace.samples_dbm.push_back(value);
      p = field_end == end ? end : field_end + 1;
      if (field_end != end && p == end) {
        throw TraceParseError(line_no, "trailing comma");
      }
    }
    if (trace.samples_dbm.size() != kSamplesPerRecord) {
      throw TraceParseError(
          line_no, "wrong sample count: got " +
                       std::to_string(trace.samples_dbm.size()) + ", expected " +
                       std::to_string(kSamplesPerRecord));
    }
    out.push_back(std::move(trace));
  }
  return out;
}

OccupancyTrace to_occupancy(const RssiTrace& trace, double threshold_dbm) {
  if (!std::isfinite(threshold_dbm)) {
    throw std::invalid_argument("to_occupancy: threshold must be finite");
  }
  std::vector<std::uint8_t> busy(trace.samples_dbm.size());
  for (std::size_t i = 0; i < busy.size(); ++i) {
    busy[i] = trace.samples_dbm[i] >= threshold_dbm ? 1 : 0;
  }
  return OccupancyTrace(std::move(busy), trace.channel_label);
}

std::optional<int> bin_label_for(std::uint64_t busy_samples,
                                 std::uint64_t total_samples) {
  if (total_samples == 0) return std::nullopt;
  // Label L fits iff (L-5)*n <= 100*busy < (L+5)*n; solving for the decile
  // gives L = 10 * floor((100*busy + 5*n) / (10*n)). Exact in integers.
  const std::uint64_t label =
      10 * ((100 * busy_samples + 5 * total_samples) / (10 * total_samples));
  if (label < 10 || label > 90) return std::nullopt;
  return static_cast<int>(label);
}

BinningResult bin_traces(const std::vector<TracePtr>& traces) {
  BinningResult result;
  for (const TracePtr& t : traces) {
    const auto label = bin_label_for(t->busy_sample_count(), t->sample_count());
    if (!label) {
      result.unbinned.push_back(t);
      continue;
    }
    OccupancyBin& bin = result.bins[*label];
    bin.label_pct = *label;
    bin.members.push_back(t);
  }
  return result;
}

OccupancyTrace synthesize_onoff(const SynthTraceParams& params, std::uint64_t seed) {
  if (!(params.target_occupancy > 0.0) || !(params.target_occupancy < 1.0)) {
    throw std::invalid_argument("synthesize_onoff: occupancy must be in (0, 1)");
  }
  if (!(params.mean_busy_us > 0.0)) {
    throw std::invalid_argument("synthesize_onoff: mean busy duration must be positive");
  }
  const std::size_t samples =
      static_cast<std::size_t>(params.duration_us / kSamplePeriodUs);
  if (samples == 0) {
    throw std::invalid_argument("synthesize_onoff: zero-duration request");
  }

  RngStream rng(seed);
  std::vector<std::uint8_t> busy(samples, 0);

  // Start in the stationary state mix, then alternate bursts. Boundaries stay
  // on a continuous axis and are snapped to the sample grid, so rounding never
  // drifts the busy fraction.
  bool state_busy = rng.bernoulli(params.target_occupancy);
  const double mean_idle = params.mean_idle_us();
  double t = 0.0;
  std::size_t cursor = 0;
  const double duration = static_cast<double>(samples) * kSamplePeriodUs;
  while (cursor < samples && t < duration) {
    const double mean = state_busy ? params.mean_busy_us : mean_idle;
    const double burst = params.burst_distribution == BurstDistribution::Fixed
                             ? mean
                             : rng.exponential(mean);
    t += burst;
    std::size_t next = static_cast<std::size_t>(
        std::llround(t / static_cast<double>(kSamplePeriodUs)));
    next = std::min(next, samples);
    if (state_busy) {
      std::fill(busy.begin() + cursor, busy.begin() + next, std::uint8_t{1});
    }
    cursor = std::max(cursor, next);
    state_busy = !state_busy;
  }
  return OccupancyTrace(std::move(busy));
}

void write_trace_csv(std::ostream& out, const OccupancyTrace& trace,
                     double threshold_dbm) {
  const long busy_level = std::lround(threshold_dbm + 10.0);
  const long idle_level = std::lround(threshold_dbm - 10.0);
  for (std::size_t i = 0; i < trace.sample_count(); ++i) {
    if (i) out.put(',');
    out << (trace.busy_at_sample(i) ? busy_level : idle_level);
  }
  out.put('\n');
}

}  // namespace mlolab
