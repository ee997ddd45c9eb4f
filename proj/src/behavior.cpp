#include "pssl/behavior.hpp"

#include <cmath>

#include "pssl/error.hpp"

namespace pssl::behavior {

namespace {

double signed_rate(TurnDirection dir, double rate) {
  return dir == TurnDirection::CounterClockwise ? rate : -rate;
}

// State 1: choose a fresh heading and the shorter way round to it.
StepOutput pick_direction(const FsmState& fsm, double heading, const BehaviorConfig& cfg,
                          Rng& rng) {
  StepOutput out;
  out.next = fsm;
  out.next.mode = Mode::Turning;
  out.next.target_heading = rng.uniform(0.0, 2.0 * sim::kPi);
  out.next.target_reached = false;
  out.next.turn_direction = attitude_error(out.next.target_heading, heading) >= 0.0
                                ? TurnDirection::CounterClockwise
                                : TurnDirection::Clockwise;
  out.command = sim::Command::turn(signed_rate(out.next.turn_direction, cfg.turn_rate));
  out.turn_started = true;
  return out;
}

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::Forward: return "forward";
    case Mode::PickDirection: return "pick_direction";
    case Mode::Turning: return "turning";
  }
  return "unknown";
}

void BehaviorConfig::validate(double disparity_max) const {
  if (!(threshold > 0.0 && threshold < disparity_max))
    throw Error("invalid-config", "behavior.threshold: must lie in (0, disparity_max)");
  if (!(attitude_tolerance > 0.0))
    throw Error("invalid-config", "behavior.attitude_tolerance: must be > 0");
  if (!(turn_rate > 0.0)) throw Error("invalid-config", "behavior.turn_rate: must be > 0");
}

double attitude_error(double target, double heading) { return sim::wrap_angle(target - heading); }

StepOutput fsm_step(const FsmState& fsm, double disparity, double heading,
                    const BehaviorConfig& cfg, Rng& rng) {
  const bool blocked = disparity > cfg.threshold;
  switch (fsm.mode) {
    case Mode::Forward:
      if (blocked) return pick_direction(fsm, heading, cfg, rng);
      return {sim::Command::forward(), fsm, false};

    case Mode::PickDirection:
      return pick_direction(fsm, heading, cfg, rng);

    case Mode::Turning: {
      const sim::Command keep_turning =
          sim::Command::turn(signed_rate(fsm.turn_direction, cfg.turn_rate));
      const bool aligned =
          fsm.target_reached ||
          std::abs(attitude_error(fsm.target_heading, heading)) <= cfg.attitude_tolerance;
      if (!aligned) return {keep_turning, fsm, false};
      if (!blocked) {
        FsmState next = fsm;
        next.mode = Mode::Forward;
        next.target_reached = false;
        return {sim::Command::forward(), next, false};
      }
      FsmState next = fsm;
      next.target_reached = true;
      return {keep_turning, next, false};
    }
  }
  return {sim::Command::forward(), fsm, false};
}

}  // namespace pssl::behavior
