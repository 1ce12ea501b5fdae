#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "hysctl/error.hpp"
#include "hysctl/hysteresis.hpp"
#include "hysctl/io.hpp"
#include "oracles.hpp"

using namespace hysctl;

TEST_CASE("play_update clamps onto the strip") {
  CHECK(play_update({0.2, 0.5}, 1.0).w == doctest::Approx(0.8));
  CHECK(play_update({0.2, 0.5}, 0.6).w == 0.5);
  CHECK(play_update({1.0, 0.0}, -3.0).w == doctest::Approx(-2.0));
}

TEST_CASE("play_apply basic behaviour") {
  SUBCASE("constant input keeps the seed") {
    const auto w = play_apply(PolylineSignal::constant(2.0, 0.3), 0.1, 0.25);
    for (const auto& k : w.knots()) CHECK(k.v == 0.1);
  }
  SUBCASE("sawtooth closes its loop") {
    const PolylineSignal u({{0.0, 0.0}, {1.0, 2.0}, {2.0, 0.0}, {3.0, 2.0}});
    const auto w = play_apply(u, 0.0, 1.0);
    CHECK(w(0.0) == 0.0);
    CHECK(w(1.0) == doctest::Approx(1.0));
    CHECK(w(2.0) == doctest::Approx(1.0));
    CHECK(w(3.0) == doctest::Approx(1.0));
    CHECK(w(0.25) == doctest::Approx(0.0));  // interior until u reaches w + rho
    CHECK(w(0.75) == doctest::Approx(0.5));
    const auto ts = oracle::sample_times(u, 10000);
    const auto ref = oracle::play(u, 0.0, 1.0, ts);
    double gap = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) gap = std::max(gap, std::abs(w(ts[i]) - ref[i]));
    CHECK(gap < 1e-12);
  }
  SUBCASE("inadmissible seed") {
    CHECK_THROWS_AS(play_apply(PolylineSignal::constant(1.0, 0.0), 0.5, 0.2), DomainError);
    CHECK_THROWS_AS(play_apply(PolylineSignal::constant(1.0, 0.0), 0.0, -1.0), DomainError);
  }
  SUBCASE("regime changes become output knots") {
    const PolylineSignal u({{0.0, 0.0}, {1.0, 1.0}});
    const auto w = play_apply(u, 0.0, 0.25);
    // Frozen until t = 0.25, then slope 1.
    REQUIRE(w.size() == 3);
    CHECK(w.knots()[1].t == doctest::Approx(0.25));
    CHECK(w.back() == doctest::Approx(0.75));
  }
}

TEST_CASE("play_apply agrees with the sampled recursion on random inputs") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> r(0.01, 1.5);
  std::uniform_real_distribution<double> s(-1.0, 1.0);
  for (int c = 0; c < 300; ++c) {
    const auto u = oracle::random_polyline(rng, 8, -3.0, 3.0);
    const double rho = r(rng);
    const double w0 = u.front() + rho * s(rng);
    const auto w = play_apply(u, w0, rho);
    const auto ts = oracle::sample_times(u, 50);
    const auto ref = oracle::play(u, w0, rho, ts);
    for (std::size_t i = 0; i < ts.size(); ++i) REQUIRE(std::abs(w(ts[i]) - ref[i]) < 1e-11);
  }
}

TEST_CASE("truncated play") {
  CHECK(truncated_play_lower(0.5) == 0.0);
  CHECK(truncated_play_lower(-3.0) == -1.0);
  CHECK(truncated_play_upper(-0.5) == 0.0);
  CHECK(truncated_play_upper(2.0) == 1.0);
  CHECK(truncated_play_update({-1.0}, 0.75).w == doctest::Approx(0.5));
  CHECK(truncated_play_update({0.5}, 0.0).w == 0.5);

  SUBCASE("rising branch") {
    const auto w = truncated_play_apply(PolylineSignal({{0.0, -2.0}, {4.0, 2.0}}), -1.0);
    CHECK(w(1.0) == -1.0);
    CHECK(w(2.0) == doctest::Approx(-1.0));
    CHECK(w(2.5) == doctest::Approx(0.0));
    CHECK(w(3.0) == doctest::Approx(1.0));
    CHECK(w(4.0) == doctest::Approx(1.0));
  }
  SUBCASE("constant input") {
    const auto w = truncated_play_apply(PolylineSignal::constant(1.0, 0.2), 0.1);
    CHECK(w.back() == 0.1);
  }
  SUBCASE("bad seed") { CHECK_THROWS_AS(truncated_play_apply(PolylineSignal::constant(1.0, 0.9), -1.0), DomainError); }
  SUBCASE("oracle") {
    std::mt19937_64 rng(5);
    for (int c = 0; c < 200; ++c) {
      const auto u = oracle::random_polyline(rng, 6, -2.0, 2.0);
      const double w0 = std::clamp(truncated_play_lower(u.front()), -1.0, 1.0);
      const auto w = truncated_play_apply(u, w0);
      const auto ts = oracle::sample_times(u, 40);
      const auto ref = oracle::truncated_play(u, w0, ts);
      for (std::size_t i = 0; i < ts.size(); ++i) REQUIRE(std::abs(w(ts[i]) - ref[i]) < 1e-11);
    }
  }
}

TEST_CASE("relay_advance") {
  const RelayState on{-0.5, 0.5, 1};
  const auto down = relay_advance(on, 0.0, -0.6, 0.0, 1.0);
  CHECK(down.state.out == -1);
  REQUIRE(down.event.has_value());
  CHECK(down.event->time == doctest::Approx(0.5 / 0.6));
  CHECK(down.event->old_out == 1);
  CHECK(down.event->new_out == -1);

  const auto up = relay_advance(on, 0.0, 0.9);
  CHECK(up.state.out == 1);
  CHECK_FALSE(up.event.has_value());

  const RelayState off{-0.5, 0.5, -1};
  const auto edge = relay_advance(off, 0.4, 0.5);
  CHECK(edge.state.out == -1);  // equality does not switch
  CHECK_FALSE(edge.event.has_value());

  CHECK_THROWS_AS(relay_advance(on, -0.7, 0.0), DomainError);
  CHECK(relay_consistent(on, -0.5));
  CHECK_FALSE(relay_consistent(off, 0.6));
}

TEST_CASE("relay switch count is bounded by input variation") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> th(0.05, 1.0);
  for (int c = 0; c < 500; ++c) {
    const auto u = oracle::random_polyline(rng, 10, -2.0, 2.0);
    const double half = th(rng);
    RelayState r{-half, half, u.front() > half ? 1 : -1};
    int switches = 0;
    const auto kn = u.knots();
    for (std::size_t i = 0; i + 1 < kn.size(); ++i) {
      const auto st = relay_advance(r, kn[i].v, kn[i + 1].v, kn[i].t, kn[i + 1].t);
      r = st.state;
      switches += st.event ? 1 : 0;
    }
    CHECK(switches <= static_cast<int>(std::ceil(u.total_variation() / (2.0 * half))) + 1);
  }
}

TEST_CASE("relay events agree with a dense sampler") {
  std::mt19937_64 rng(13);
  const double dt = 1e-4;
  for (int c = 0; c < 50; ++c) {
    const auto u = oracle::random_polyline(rng, 6, -1.5, 1.5);
    RelayState r{-0.3, 0.4, u.front() > 0.4 ? 1 : -1};
    const int out0 = r.out;
    std::vector<SwitchEvent> ev;
    const auto kn = u.knots();
    for (std::size_t i = 0; i + 1 < kn.size(); ++i) {
      const auto st = relay_advance(r, kn[i].v, kn[i + 1].v, kn[i].t, kn[i + 1].t);
      r = st.state;
      if (st.event) ev.push_back(*st.event);
    }
    const auto hits = oracle::relay(u, -0.3, 0.4, out0, dt);
    REQUIRE(hits.size() == ev.size());
    for (std::size_t i = 0; i < ev.size(); ++i) {
      CHECK(hits[i].out == ev[i].new_out);
      CHECK(hits[i].time >= ev[i].time - 1e-12);
      CHECK(hits[i].time <= ev[i].time + dt + 1e-12);
    }
  }
}

TEST_CASE("relay bank layout and staircase") {
  const auto b = RelayBank::uniform(4, -1);
  CHECK(b.relays()[0].lo == doctest::Approx(-0.75));
  CHECK(b.relays()[0].hi == doctest::Approx(0.25));
  CHECK(b.relays()[3].lo == doctest::Approx(0.0));
  CHECK(b.relays()[3].hi == doctest::Approx(1.0));
  CHECK(b.output() == -1.0);
  CHECK(b.is_staircase());
  CHECK(RelayBank::staircase(4, 1).outputs() == std::vector<int>{1, -1, -1, -1});
  CHECK_FALSE(RelayBank(4, {-1, 1, -1, -1}).is_staircase());
  CHECK(RelayBank::staircase(4, 2).output() == 0.0);
  CHECK_THROWS_AS(RelayBank(3, {1, 1}), DomainError);
}

TEST_CASE("bank_apply rising sweep") {
  const PolylineSignal sweep({{0.0, -1.5}, {3.0, 1.5}});
  const auto r = bank_apply(RelayBank::uniform(4, -1), sweep);
  REQUIRE(r.events.size() == 4);
  const double levels[] = {-0.5, 0.0, 0.5, 1.0};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(r.events[i].index == i);
    CHECK(r.events[i].new_out == 1);
    // Input crosses (i + 1) / 4 at t = (i + 1) / 4 + 1.5.
    CHECK(r.events[i].time == doctest::Approx((i + 1) / 4.0 + 1.5));
    CHECK(r.output(r.events[i].time + 1e-9) == doctest::Approx(levels[i]));
  }
  CHECK(r.output(0.0) == -1.0);
  CHECK(r.final_state.output() == 1.0);
}

TEST_CASE("bank_apply with constant input is constant") {
  const auto r = bank_apply(RelayBank::staircase(4, 2), PolylineSignal::constant(2.0, 0.1));
  CHECK(r.events.empty());
  CHECK(r.output.values().size() == 1);
  CHECK(r.output.values()[0] == 0.0);
}

TEST_CASE("staircase persists under oscillation") {
  std::vector<Knot> kn{{0.0, 0.0}};
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> v(-0.74, 0.49);
  for (int i = 1; i <= 40; ++i) kn.push_back({double(i), v(rng)});
  auto bank = RelayBank::staircase(4, 1);
  const PolylineSignal u(kn);
  const auto r = bank_apply(bank, u);
  auto outs = bank.outputs();
  for (const auto& e : r.events) {
    outs[e.index] = e.new_out;
    CHECK(RelayBank(4, outs).is_staircase());
  }
  CHECK(r.final_state.is_staircase());
}

TEST_CASE("bank order of relay updates does not matter") {
  std::mt19937_64 rng(19);
  for (int c = 0; c < 200; ++c) {
    const std::size_t k = 8;
    const auto u = oracle::random_polyline(rng, 6, -1.5, 1.5);
    RelayBank bank = RelayBank::uniform(k, -1);
    if (u.front() > bank.relays()[0].hi) continue;
    const auto ordered = bank_apply(bank, u).events;

    std::vector<RelayState> relays = bank.relays();
    std::vector<std::size_t> order(k);
    for (std::size_t i = 0; i < k; ++i) order[i] = i;
    std::vector<SwitchEvent> shuffled;
    const auto kn = u.knots();
    for (std::size_t s = 0; s + 1 < kn.size(); ++s) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t i : order) {
        const auto st = relay_advance(relays[i], kn[s].v, kn[s + 1].v, kn[s].t, kn[s + 1].t);
        relays[i] = st.state;
        if (st.event) shuffled.push_back({st.event->time, i, st.event->old_out, st.event->new_out});
      }
    }
    std::sort(shuffled.begin(), shuffled.end(),
              [](const SwitchEvent& a, const SwitchEvent& b) { return a.time < b.time || (a.time == b.time && a.index < b.index); });
    REQUIRE(shuffled.size() == ordered.size());
    for (std::size_t i = 0; i < ordered.size(); ++i) {
      CHECK(shuffled[i].index == ordered[i].index);
      CHECK(shuffled[i].time == ordered[i].time);
      CHECK(shuffled[i].new_out == ordered[i].new_out);
    }
  }
}

TEST_CASE("bank tracks the truncated play within 2/k") {
  std::mt19937_64 rng(23);
  for (std::size_t k : {4u, 16u, 64u}) {
    for (int c = 0; c < 100; ++c) {
      std::vector<Knot> kn{{0.0, -1.5}};
      std::uniform_real_distribution<double> v(-1.5, 1.5);
      for (int i = 1; i <= 6; ++i) kn.push_back({double(i), v(rng)});
      const PolylineSignal u(kn);
      const auto r = bank_apply(RelayBank::uniform(k, -1), u);
      CHECK(sup_distance(r.output, truncated_play_apply(u, -1.0)) <= 2.0 / static_cast<double>(k) + 1e-12);
    }
  }
}

TEST_CASE("drive_to_staircase") {
  const RelayBank messy(4, {-1, 1, -1, 1});
  CHECK_FALSE(messy.is_staircase());
  const auto pre = drive_to_staircase(messy, 0.1);
  CHECK(pre.bank.is_staircase());
  CHECK(pre.input.front() == doctest::Approx(0.1));
  CHECK(pre.input.back() == doctest::Approx(0.1));
  const auto replay = bank_apply(messy, pre.input);
  CHECK(replay.final_state.outputs() == pre.bank.outputs());
  // Already staircase: no excursion needed.
  const auto calm = drive_to_staircase(RelayBank::staircase(4, 2), 0.1);
  CHECK(calm.input.total_variation() == 0.0);
}

TEST_CASE("operator states serialize to JSON") {
  CHECK(to_json(PlayState{0.2, 0.5}) == json{{"rho", 0.2}, {"w", 0.5}});
  CHECK(to_json(RelayState{-0.5, 0.5, 1}) == json{{"lo", -0.5}, {"hi", 0.5}, {"out", 1}});
  const auto b = to_json(RelayBank::staircase(2, 1));
  CHECK(b["relays"].size() == 2);
  CHECK(b["relays"][0]["out"] == 1);

  std::ostringstream os;
  write_switch_events_csv(os, {{0.5, 2, -1, 1}});
  CHECK(os.str() == "t,relay_index,new_output\n0.5,2,1\n");
}
