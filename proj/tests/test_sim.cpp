#include "mlolab/sim.hpp"

#include <algorithm>
#include <map>
#include <memory>

#include "doctest.h"
#include "mlolab/rng.hpp"

using namespace mlolab;

namespace {

TracePtr idle_trace(Micros duration = 1000000) {
  return std::make_shared<OccupancyTrace>(OccupancyTrace::all_idle(duration));
}

TracePtr noisy_trace(double busy_prob, std::uint64_t seed,
                     std::size_t samples = 100000) {
  RngStream rng(seed);
  std::vector<std::uint8_t> v(samples);
  for (auto& s : v) s = rng.bernoulli(busy_prob) ? 1 : 0;
  return std::make_shared<OccupancyTrace>(std::move(v));
}

}  // namespace

TEST_CASE("arrival generator honors the rate") {
  const ArrivalSchedule empty = gen_poisson_arrivals(0.0, 1000000, 1);
  CHECK(empty.packets.empty());

  const ArrivalSchedule s = gen_poisson_arrivals(1000.0, 10000000, 2);
  // 1000/s over 10 s: expect about 10000 arrivals, sd = 100.
  CHECK(s.packets.size() > 9500);
  CHECK(s.packets.size() < 10500);
  for (std::size_t i = 1; i < s.packets.size(); ++i) {
    CHECK(s.packets[i].arrival_us > s.packets[i - 1].arrival_us);
    CHECK(s.packets[i].id == i);
  }
  CHECK(s.packets.back().arrival_us < 10000000);

  const double mean_gap = static_cast<double>(s.packets.back().arrival_us) /
                          static_cast<double>(s.packets.size() - 1);
  CHECK(mean_gap == doctest::Approx(1000.0).epsilon(0.03));

  CHECK_THROWS_AS(gen_poisson_arrivals(-1.0, 1000, 1), std::invalid_argument);
}

TEST_CASE("arrival generation is deterministic per seed") {
  const ArrivalSchedule a = gen_poisson_arrivals(5000.0, 1000000, 9);
  const ArrivalSchedule b = gen_poisson_arrivals(5000.0, 1000000, 9);
  const ArrivalSchedule c = gen_poisson_arrivals(5000.0, 1000000, 10);
  REQUIRE(a.packets.size() == b.packets.size());
  for (std::size_t i = 0; i < a.packets.size(); ++i) {
    CHECK(a.packets[i].arrival_us == b.packets[i].arrival_us);
  }
  CHECK(a.packets.size() != c.packets.size());  // astronomically unlikely to tie
}

TEST_CASE("a run is a pure function of its inputs") {
  const TracePtr primary = noisy_trace(0.3, 77);
  const TracePtr secondary = noisy_trace(0.3, 78);
  const ArrivalSchedule sched = gen_poisson_arrivals(3000.0, 1000000, 5);
  for (AccessMode mode : {AccessMode::Slo, AccessMode::Str, AccessMode::Nstr,
                          AccessMode::StrPlus}) {
    SimConfig c;
    c.mode = mode;
    c.primary_trace = primary;
    c.secondary_trace = interface_count(mode) == 2 ? secondary : nullptr;
    const RunResult a = run(c, sched);
    const RunResult b = run(c, sched);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i] == b.records[i]);
    }
    CHECK(a.delivered_bits == b.delivered_bits);
  }
}

TEST_CASE("run rejects inconsistent setups") {
  SimConfig c;
  c.mode = AccessMode::Slo;
  ArrivalSchedule sched;
  sched.duration_us = 1000000;
  CHECK_THROWS_AS(run(c, sched), std::invalid_argument);  // no trace

  c.primary_trace = idle_trace();
  c.mode = AccessMode::Str;
  CHECK_THROWS_AS(run(c, sched), std::invalid_argument);  // no secondary

  c.secondary_trace = idle_trace(500000);
  CHECK_THROWS_AS(run(c, sched), std::invalid_argument);  // duration mismatch

  c.secondary_trace = idle_trace();
  sched.duration_us = 999;
  CHECK_THROWS_AS(run(c, sched), std::invalid_argument);  // schedule mismatch

  sched.duration_us = 1000000;
  sched.packets = {{0, 50, 12000}, {1, 50, 12000}};
  CHECK_THROWS_AS(run(c, sched), std::invalid_argument);  // non-increasing
}

TEST_CASE("saturation throughput of an idle link sits near 12000/313 Mbps") {
  SimConfig base;
  std::vector<std::pair<TracePtr, TracePtr>> pairs;
  for (int i = 0; i < 10; ++i) pairs.emplace_back(idle_trace(), nullptr);
  const double bps = full_buffer_throughput(AccessMode::Slo, base, pairs);
  // Mean cycle: DIFS(30) + 10 * E[backoff](7.5) + exchange(208) = 313 us.
  CHECK(bps / 1e6 == doctest::Approx(12000.0 / 313.0).epsilon(0.02));
}

TEST_CASE("saturation throughput of a dead channel is zero") {
  SimConfig base;
  const TracePtr busy =
      std::make_shared<OccupancyTrace>(OccupancyTrace::all_busy(1000000));
  CHECK(full_buffer_throughput(AccessMode::Slo, base, {{busy, nullptr}}) == 0.0);
  CHECK_THROWS_AS(full_buffer_throughput(AccessMode::Slo, base, {}),
                  std::invalid_argument);
}

TEST_CASE("dual links under saturation beat one link") {
  SimConfig base;
  std::vector<std::pair<TracePtr, TracePtr>> pairs;
  for (int i = 0; i < 5; ++i) pairs.emplace_back(idle_trace(), idle_trace());
  const double slo = full_buffer_throughput(AccessMode::Slo, base, pairs);
  const double strp = full_buffer_throughput(AccessMode::StrPlus, base, pairs);
  const double str = full_buffer_throughput(AccessMode::Str, base, pairs);
  CHECK(strp > 1.8 * slo);
  CHECK(str > 1.8 * slo);
}

TEST_CASE("the delivery filter cuts exactly at 95%") {
  auto with_ratio = [](std::uint64_t delivered, std::uint64_t generated) {
    RunResult r;
    r.generated = generated;
    r.delivered = delivered;
    r.delivered_fraction = generated == 0 ? 1.0
                                          : static_cast<double>(delivered) /
                                                static_cast<double>(generated);
    return r;
  };
  CHECK(is_retained(with_ratio(94, 100)) == false);
  CHECK(is_retained(with_ratio(95, 100)) == true);
  CHECK(is_retained(with_ratio(100, 100)) == true);
  CHECK(is_retained(with_ratio(18, 19)) == false);   // 94.7%
  CHECK(is_retained(with_ratio(19, 20)) == true);    // exactly 95%
  CHECK(is_retained(with_ratio(0, 0)) == true);      // vacuous run stays

  std::vector<RunResult> results;
  results.push_back(with_ratio(100, 100));
  results.push_back(with_ratio(94, 100));
  results.push_back(with_ratio(95, 100));
  const auto retained = filter_saturated(std::move(results));
  REQUIRE(retained.size() == 2);
  for (const auto& r : retained) CHECK_FALSE(r.discarded);
}

TEST_CASE("per-mode delay floors") {
  // Contending packets pay at least DIFS + exchange = 238 us. Two mode
  // features legitimately undercut that: a transmit-constrained secondary
  // ships a queued packet with no contention of its own (arrival precedes the
  // primary expiry by >= 1 us, so >= 209), and a parked zero counter in the
  // queue-fed mode serves an arrival with the bare exchange (208).
  RngStream rng(31);
  for (int rep = 0; rep < 5; ++rep) {
    const TracePtr primary = noisy_trace(0.25, 400 + rep);
    const TracePtr secondary = noisy_trace(0.25, 500 + rep);
    const ArrivalSchedule sched =
        gen_poisson_arrivals(1500.0, 1000000, 600 + rep);
    for (AccessMode mode : {AccessMode::Slo, AccessMode::Str, AccessMode::Nstr,
                            AccessMode::StrPlus}) {
      SimConfig c;
      c.mode = mode;
      c.backoff_seed = rng.next_u64();
      c.primary_trace = primary;
      c.secondary_trace = interface_count(mode) == 2 ? secondary : nullptr;
      const RunResult r = run(c, sched);
      for (const auto& rec : r.records) {
        switch (mode) {
          case AccessMode::Slo:
          case AccessMode::Str:
            CHECK(rec.delay_us >= 238);
            break;
          case AccessMode::Nstr:
            CHECK(rec.delay_us >= (rec.interface_used == 0 ? 238 : 209));
            break;
          case AccessMode::StrPlus:
            CHECK(rec.delay_us >= 208);
            break;
        }
      }
    }
  }
}

TEST_CASE("coupled comparison reuses arrivals and draw streams") {
  const TracePtr primary = noisy_trace(0.2, 91);
  const TracePtr secondary = noisy_trace(0.2, 92);
  const ArrivalSchedule sched = gen_poisson_arrivals(2500.0, 1000000, 93);
  SimConfig base;
  base.backoff_seed = 94;

  const AccessMode modes[] = {AccessMode::Slo, AccessMode::Nstr};
  const auto results = compare_modes(primary, secondary, sched, base, modes);
  REQUIRE(results.count(AccessMode::Slo) == 1);
  REQUIRE(results.count(AccessMode::Nstr) == 1);

  // The transmit-constrained pair rides the same primary draw sequence, so
  // with a spare link it can only ship packets earlier, never later.
  const auto& slo = results.at(AccessMode::Slo);
  const auto& nstr = results.at(AccessMode::Nstr);
  std::map<std::uint32_t, Micros> nstr_depart;
  for (const auto& rec : nstr.records) nstr_depart[rec.packet_id] = rec.depart_us;
  for (const auto& rec : slo.records) {
    auto it = nstr_depart.find(rec.packet_id);
    REQUIRE(it != nstr_depart.end());
    CHECK(it->second <= rec.depart_us);
  }
}
