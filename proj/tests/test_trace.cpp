#include "mlolab/trace.hpp"

#include <cmath>
#include <sstream>

#include "doctest.h"

using namespace mlolab;

namespace {

// One full CSV record: every sample idle_dbm except the listed busy sample
// indexes, which get busy_dbm.
std::string make_record(const std::vector<std::size_t>& busy_samples,
                        double busy_dbm = -60.0, double idle_dbm = -95.0) {
  std::vector<double> samples(kSamplesPerRecord, idle_dbm);
  for (std::size_t i : busy_samples) samples[i] = busy_dbm;
  std::ostringstream out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i) out << ',';
    out << samples[i];
  }
  out << '\n';
  return out.str();
}

OccupancyTrace from_pattern(std::initializer_list<int> pattern) {
  return OccupancyTrace(std::vector<std::uint8_t>(pattern.begin(), pattern.end()));
}

}  // namespace

TEST_CASE("parser round-trips a single record") {
  std::istringstream in(make_record({0, 1, 7}));
  const auto traces = parse_rssi_trace(in, "ch36");
  REQUIRE(traces.size() == 1);
  CHECK(traces[0].samples_dbm.size() == kSamplesPerRecord);
  CHECK(traces[0].channel_label == "ch36");
  CHECK(traces[0].samples_dbm[0] == doctest::Approx(-60.0));
  CHECK(traces[0].samples_dbm[2] == doctest::Approx(-95.0));
  CHECK(traces[0].samples_dbm[7] == doctest::Approx(-60.0));
}

TEST_CASE("parser keeps record order and skips headers and blanks") {
  std::ostringstream src;
  src << "# channel 36, 1 s records\n";
  src << make_record({0});
  src << "\n";
  src << make_record({0, 1});
  src << "# trailing comment\n";
  src << make_record({0, 1, 2});
  std::istringstream in(src.str());
  const auto traces = parse_rssi_trace(in, "x");
  REQUIRE(traces.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    std::size_t busy = 0;
    for (double v : traces[k].samples_dbm) busy += v > -80.0 ? 1 : 0;
    CHECK(busy == k + 1);
  }
}

TEST_CASE("parser tolerates CRLF line endings") {
  std::string body = make_record({3});
  body.insert(body.size() - 1, "\r");  // turn \n into \r\n
  body += "\r\n";                      // plus an empty CRLF line
  std::istringstream in(body);
  const auto traces = parse_rssi_trace(in, "x");
  REQUIRE(traces.size() == 1);
  CHECK(traces[0].samples_dbm[3] == doctest::Approx(-60.0));
}

TEST_CASE("parser reports the failing line number") {
  SUBCASE("short record") {
    std::istringstream in("# header\n-50,-50,-50\n");
    try {
      parse_rssi_trace(in, "x");
      FAIL("expected TraceParseError");
    } catch (const TraceParseError& e) {
      CHECK(e.line_number == 2);
      CHECK(std::string(e.what()).find("wrong sample count: got 3") !=
            std::string::npos);
    }
  }
  SUBCASE("non numeric field") {
    std::ostringstream src;
    src << make_record({0}) << make_record({0});
    std::string third = make_record({0});
    third.replace(third.find(','), 1, ",oops");
    src << third;
    std::istringstream in(src.str());
    try {
      parse_rssi_trace(in, "x");
      FAIL("expected TraceParseError");
    } catch (const TraceParseError& e) {
      CHECK(e.line_number == 3);
      CHECK(std::string(e.what()).find("oops") != std::string::npos);
    }
  }
  SUBCASE("trailing comma") {
    std::string row = make_record({0});
    row.insert(row.size() - 1, ",");
    std::istringstream in(row);
    CHECK_THROWS_AS(parse_rssi_trace(in, "x"), TraceParseError);
  }
}

TEST_CASE("occupancy thresholding is >= and boundary-exact") {
  RssiTrace raw;
  raw.samples_dbm = {-82.0, -82.0001, -81.9999, -100.0, -40.0};
  const OccupancyTrace t = to_occupancy(raw, -82.0);
  CHECK(t.busy_at_sample(0));        // exactly at the threshold counts as busy
  CHECK_FALSE(t.busy_at_sample(1));
  CHECK(t.busy_at_sample(2));
  CHECK_FALSE(t.busy_at_sample(3));
  CHECK(t.busy_at_sample(4));
  CHECK(t.busy_sample_count() == 3);

  CHECK_THROWS_AS(to_occupancy(raw, std::nan("")), std::invalid_argument);
}

TEST_CASE("30% busy record maps to occupancy 0.30") {
  std::vector<std::uint8_t> busy(100000, 0);
  std::fill(busy.begin(), busy.begin() + 30000, std::uint8_t{1});
  const OccupancyTrace t(std::move(busy));
  CHECK(t.occupancy() == doctest::Approx(0.30));
  CHECK(bin_label_for(t.busy_sample_count(), t.sample_count()) == 30);
}

TEST_CASE("bin edges are half-open and exact") {
  const std::uint64_t n = 100000;
  CHECK(bin_label_for(4999, n) == std::nullopt);  // 4.999% below the first bin
  CHECK(bin_label_for(5000, n) == 10);            // 5.000% opens bin 10
  CHECK(bin_label_for(14999, n) == 10);           // 14.999% still bin 10
  CHECK(bin_label_for(15000, n) == 20);           // 15.000% tips into bin 20
  CHECK(bin_label_for(94999, n) == 90);
  CHECK(bin_label_for(95000, n) == std::nullopt);  // 95% and up stays unbinned
  CHECK(bin_label_for(0, n) == std::nullopt);
  CHECK(bin_label_for(n, n) == std::nullopt);
  CHECK(bin_label_for(1, 3) == 30);  // 33.3% of a tiny trace
  CHECK(bin_label_for(0, 0) == std::nullopt);
}

TEST_CASE("every busy count is binned exactly once or not at all") {
  const std::uint64_t n = 200;
  for (std::uint64_t busy = 0; busy <= n; ++busy) {
    const double pct = 100.0 * static_cast<double>(busy) / static_cast<double>(n);
    const auto label = bin_label_for(busy, n);
    int fitting = 0;
    for (int l = 10; l <= 90; l += 10) {
      if (pct >= l - 5 && pct < l + 5) ++fitting;
    }
    if (label) {
      CHECK(fitting == 1);
      CHECK(pct >= *label - 5);
      CHECK(pct < *label + 5);
    } else {
      CHECK(fitting == 0);
    }
  }
}

TEST_CASE("bin_traces partitions by label") {
  auto with_occupancy = [](std::size_t busy, std::size_t n) {
    std::vector<std::uint8_t> v(n, 0);
    std::fill(v.begin(), v.begin() + busy, std::uint8_t{1});
    return std::make_shared<OccupancyTrace>(std::move(v));
  };
  const std::vector<TracePtr> traces = {
      with_occupancy(0, 1000),    // unbinned
      with_occupancy(120, 1000),  // 12% -> bin 10
      with_occupancy(420, 1000),  // 42% -> bin 40
      with_occupancy(440, 1000),  // 44% -> bin 40
      with_occupancy(990, 1000),  // unbinned
  };
  const BinningResult r = bin_traces(traces);
  CHECK(r.unbinned.size() == 2);
  REQUIRE(r.bins.count(10) == 1);
  REQUIRE(r.bins.count(40) == 1);
  CHECK(r.bins.at(10).members.size() == 1);
  CHECK(r.bins.at(40).members.size() == 2);
  std::size_t total = r.unbinned.size();
  for (const auto& [label, bin] : r.bins) {
    CHECK(bin.label_pct == label);
    total += bin.members.size();
  }
  CHECK(total == traces.size());
}

TEST_CASE("fixed-burst synthesis alternates exactly") {
  SynthTraceParams params;
  params.burst_distribution = BurstDistribution::Fixed;
  params.duration_us = 1000000;

  SUBCASE("50% with 2 ms bursts") {
    params.target_occupancy = 0.5;
    params.mean_busy_us = 2000.0;
    const OccupancyTrace t = synthesize_onoff(params, 11);
    CHECK(t.occupancy() == doctest::Approx(0.5));
    REQUIRE(t.busy_runs().size() == 250);
    for (const auto& run : t.busy_runs()) {
      CHECK(run.end_us - run.start_us == 2000);
    }
  }
  SUBCASE("25% with 1 ms busy / 3 ms idle") {
    params.target_occupancy = 0.25;
    params.mean_busy_us = 1000.0;
    const OccupancyTrace t = synthesize_onoff(params, 12);
    CHECK(t.occupancy() == doctest::Approx(0.25));
    for (const auto& run : t.busy_runs()) {
      CHECK(run.end_us - run.start_us == 1000);
    }
  }
}

TEST_CASE("synthesis is deterministic in the seed") {
  SynthTraceParams params;
  params.target_occupancy = 0.4;
  const OccupancyTrace a = synthesize_onoff(params, 99);
  const OccupancyTrace b = synthesize_onoff(params, 99);
  const OccupancyTrace c = synthesize_onoff(params, 100);
  CHECK(a == b);
  CHECK_FALSE(a == c);
}

TEST_CASE("long-run busy fraction converges on the target") {
  SynthTraceParams params;
  params.target_occupancy = 0.4;
  params.mean_busy_us = 2000.0;
  params.duration_us = 10000000;  // 10 s per seed
  double sum = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    const double occ = synthesize_onoff(params, 1000 + s).occupancy();
    CHECK(occ == doctest::Approx(0.4).epsilon(0.125));  // each seed within 5 pts
    sum += occ;
  }
  CHECK(sum / seeds == doctest::Approx(0.4).epsilon(0.025));  // mean within 1 pt
}

TEST_CASE("synthesis rejects degenerate parameters") {
  SynthTraceParams params;
  params.target_occupancy = 0.0;
  CHECK_THROWS_AS(synthesize_onoff(params, 1), std::invalid_argument);
  params.target_occupancy = 1.0;
  CHECK_THROWS_AS(synthesize_onoff(params, 1), std::invalid_argument);
  params.target_occupancy = 0.5;
  params.mean_busy_us = 0.0;
  CHECK_THROWS_AS(synthesize_onoff(params, 1), std::invalid_argument);
  params.mean_busy_us = 2000.0;
  params.duration_us = 5;  // shorter than one sample
  CHECK_THROWS_AS(synthesize_onoff(params, 1), std::invalid_argument);
}

TEST_CASE("written traces parse back to the same occupancy timeline") {
  SynthTraceParams params;
  params.target_occupancy = 0.3;
  params.duration_us = kSamplesPerRecord * kSamplePeriodUs;
  const OccupancyTrace original = synthesize_onoff(params, 7);

  std::stringstream io;
  write_trace_csv(io, original, kDefaultThresholdDbm);
  const auto parsed = parse_rssi_trace(io, "roundtrip");
  REQUIRE(parsed.size() == 1);
  const OccupancyTrace back = to_occupancy(parsed[0], kDefaultThresholdDbm);
  CHECK(back == original);
}

TEST_CASE("interval idleness queries") {
  //   sample:   0    1    2    3    4    5
  //   state:  idle idle idle busy idle busy
  const OccupancyTrace t = from_pattern({0, 0, 0, 1, 0, 1});
  CHECK(t.duration_us() == 60);
  CHECK(t.is_idle(0, 30));
  CHECK_FALSE(t.is_idle(0, 31));   // touches the busy sample [30, 40)
  CHECK_FALSE(t.is_idle(39, 40));
  CHECK(t.is_idle(40, 50));
  CHECK_FALSE(t.is_idle(40, 60));
  CHECK(t.is_idle(35, 35));        // empty interval is idle even inside a burst
  CHECK(t.is_idle(60, 60));        // empty interval at the very end
  CHECK_THROWS_AS(t.is_idle(0, 61), std::out_of_range);
  CHECK_THROWS_AS(t.is_idle(50, 40), std::out_of_range);

  const auto run = t.first_busy_run_overlapping(0, 60);
  REQUIRE(run.has_value());
  CHECK(run->start_us == 30);
  CHECK(run->end_us == 40);
  CHECK_FALSE(t.first_busy_run_overlapping(0, 30).has_value());
  const auto clipped = t.first_busy_run_overlapping(35, 38);
  REQUIRE(clipped.has_value());
  CHECK(clipped->start_us == 30);
}

TEST_CASE("factories and invariants") {
  const OccupancyTrace idle = OccupancyTrace::all_idle(1000);
  CHECK(idle.sample_count() == 100);
  CHECK(idle.busy_sample_count() == 0);
  CHECK(idle.busy_runs().empty());
  CHECK(idle.is_idle(0, 1000));

  const OccupancyTrace busy = OccupancyTrace::all_busy(1000);
  CHECK(busy.occupancy() == doctest::Approx(1.0));
  REQUIRE(busy.busy_runs().size() == 1);
  CHECK(busy.busy_runs()[0].start_us == 0);
  CHECK(busy.busy_runs()[0].end_us == 1000);

  CHECK_THROWS_AS(OccupancyTrace(std::vector<std::uint8_t>{}), std::invalid_argument);
}
