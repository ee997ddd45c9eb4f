#include "pssl/behavior.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

#include "pssl/error.hpp"

using namespace pssl;
using namespace pssl::behavior;
using sim::Command;
using sim::deg_to_rad;

namespace {

const BehaviorConfig cfg;
const double kLow = 3.0;
const double kHigh = 9.0;

FsmState turning(double target, TurnDirection dir) {
  FsmState s;
  s.mode = Mode::Turning;
  s.target_heading = target;
  s.turn_direction = dir;
  return s;
}

}  // namespace

TEST_SUITE("behavior") {

TEST_CASE("transition table over mode x disparity x attitude error") {
  const double heading = 1.0;
  const double small_e = heading + deg_to_rad(2.0);
  const double large_e = heading + deg_to_rad(40.0);

  for (double target : {small_e, large_e}) {
    const bool aligned = target == small_e;
    for (double lambda : {kLow, kHigh}) {
      const bool blocked = lambda == kHigh;
      CAPTURE(aligned);
      CAPTURE(blocked);

      {  // forward
        FsmState s;
        s.target_heading = target;
        Rng rng(1), ref(1);
        const auto out = fsm_step(s, lambda, heading, cfg, rng);
        if (blocked) {
          CHECK(out.next.mode == Mode::Turning);
          CHECK(out.turn_started);
          CHECK(out.next.target_heading == ref.uniform(0.0, 2.0 * sim::kPi));
          CHECK(out.command.kind == Command::Kind::Turn);
        } else {
          CHECK(out.next == s);
          CHECK(out.command == Command::forward());
          CHECK_FALSE(out.turn_started);
          CHECK(rng.next() == ref.next());  // no draw consumed
        }
      }

      {  // pick direction never persists
        FsmState s;
        s.mode = Mode::PickDirection;
        Rng rng(2);
        const auto out = fsm_step(s, lambda, heading, cfg, rng);
        CHECK(out.next.mode == Mode::Turning);
        CHECK(out.turn_started);
        const double e = attitude_error(out.next.target_heading, heading);
        CHECK(out.command.rate == (e >= 0.0 ? cfg.turn_rate : -cfg.turn_rate));
      }

      {  // turning
        const FsmState s = turning(target, TurnDirection::Clockwise);
        Rng rng(3);
        const auto out = fsm_step(s, lambda, heading, cfg, rng);
        CHECK_FALSE(out.turn_started);
        if (!aligned) {
          CHECK(out.next == s);
          CHECK(out.command == Command::turn(-cfg.turn_rate));
        } else if (!blocked) {
          CHECK(out.next.mode == Mode::Forward);
          CHECK(out.command == Command::forward());
        } else {
          CHECK(out.next.mode == Mode::Turning);
          CHECK(out.next.target_reached);
          CHECK(out.command == Command::turn(-cfg.turn_rate));
        }
      }
    }
  }
}

TEST_CASE("threshold equality keeps flying") {
  Rng rng(4);
  const auto out = fsm_step(FsmState{}, cfg.threshold, 0.0, cfg, rng);
  CHECK(out.next.mode == Mode::Forward);
  CHECK(out.command == Command::forward());
}

TEST_CASE("past the target, the turn continues until the view clears") {
  FsmState s = turning(0.0, TurnDirection::CounterClockwise);
  Rng rng(5);
  double heading = 0.0;
  auto out = fsm_step(s, kHigh, heading, cfg, rng);
  REQUIRE(out.next.target_reached);
  // now far past the target but still blocked: keep the same direction
  heading = deg_to_rad(70.0);
  out = fsm_step(out.next, kHigh, heading, cfg, rng);
  CHECK(out.command == Command::turn(cfg.turn_rate));
  out = fsm_step(out.next, kLow, heading, cfg, rng);
  CHECK(out.next.mode == Mode::Forward);
  CHECK_FALSE(out.next.target_reached);
}

TEST_CASE("scripted trace matches a hand-executed walk") {
  const double dt = 0.1;
  Rng rng(11);
  Rng ref = rng;
  const double target = ref.uniform(0.0, 2.0 * sim::kPi);
  const double e0 = attitude_error(target, 0.0);
  const double rate = e0 >= 0.0 ? cfg.turn_rate : -cfg.turn_rate;
  // steps of 9 degrees needed before |e| <= 5 degrees
  const int turn_steps = static_cast<int>(std::ceil((std::abs(e0) - cfg.attitude_tolerance) /
                                                    (cfg.turn_rate * dt)));

  std::vector<double> lambdas = {kLow, kLow, kHigh};
  for (int i = 0; i < turn_steps; ++i) lambdas.push_back(kHigh);
  lambdas.push_back(kLow);
  lambdas.push_back(kLow);

  std::vector<Command> expected = {Command::forward(), Command::forward()};
  for (int i = 0; i <= turn_steps; ++i) expected.push_back(Command::turn(rate));
  expected.push_back(Command::forward());
  expected.push_back(Command::forward());

  FsmState s;
  double heading = 0.0;
  std::vector<Command> trace;
  int picks = 0;
  for (double lambda : lambdas) {
    const auto out = fsm_step(s, lambda, heading, cfg, rng);
    trace.push_back(out.command);
    if (out.turn_started) ++picks;
    if (out.command.kind == Command::Kind::Turn) heading = sim::wrap_angle(heading + out.command.rate * dt);
    s = out.next;
  }
  CHECK(picks == 1);
  REQUIRE(trace.size() == expected.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    CAPTURE(i);
    CHECK(trace[i] == expected[i]);
  }
}

TEST_CASE("property: identical disparity streams give identical command traces") {
  Rng stream(7);
  std::vector<double> lambdas(500);
  for (auto& l : lambdas) l = stream.uniform(0.0, 12.0);
  auto run = [&](std::uint64_t seed) {
    Rng rng(seed);
    FsmState s;
    double heading = 0.0;
    std::vector<Command> out;
    for (double l : lambdas) {
      const auto o = fsm_step(s, l, heading, cfg, rng);
      CHECK(o.next.mode != Mode::PickDirection);
      if (o.command.kind == Command::Kind::Turn) heading = sim::wrap_angle(heading + o.command.rate * 0.1);
      out.push_back(o.command);
      s = o.next;
    }
    return out;
  };
  CHECK(run(42) == run(42));
}

TEST_CASE("property: low disparity is a fixed point at forward") {
  Rng rng(8);
  FsmState s;
  for (int i = 0; i < 200; ++i) {
    const auto out = fsm_step(s, rng.uniform(0.0, cfg.threshold), rng.uniform(-3, 3), cfg, rng);
    CHECK(out.next == s);
    CHECK(out.command == Command::forward());
  }
}

TEST_CASE("behavior config validation") {
  BehaviorConfig bad;
  bad.threshold = 40.0;
  CHECK_THROWS_WITH_AS(bad.validate(32.0), doctest::Contains("behavior.threshold"), Error);
  bad = BehaviorConfig{};
  bad.attitude_tolerance = 0.0;
  CHECK_THROWS_AS(bad.validate(32.0), Error);
}

}  // TEST_SUITE
