#ifndef PSSL_BEHAVIOR_HPP
#define PSSL_BEHAVIOR_HPP

#include <string_view>

#include "pssl/random.hpp"
#include "pssl/world.hpp"

namespace pssl::behavior {

// Exploration heuristic: fly forward until the average disparity exceeds a
// threshold, pick a random new heading, rotate towards it, and keep rotating
// the same way until the view is clear.
enum class Mode { Forward = 0, PickDirection = 1, Turning = 2 };
enum class TurnDirection { Clockwise, CounterClockwise };

std::string_view to_string(Mode mode);

struct FsmState {
  Mode mode = Mode::Forward;
  double target_heading = 0.0;
  TurnDirection turn_direction = TurnDirection::CounterClockwise;
  // Set once the target was reached with the view still blocked; from then
  // on only the disparity ends the turn.
  bool target_reached = false;

  bool operator==(const FsmState&) const = default;
};

struct BehaviorConfig {
  double threshold = 10.0 / 1.5;               // t, px
  double attitude_tolerance = sim::deg_to_rad(5.0);  // t_e
  double turn_rate = sim::deg_to_rad(90.0);     // rad/s

  void validate(double disparity_max) const;
};

struct StepOutput {
  sim::Command command;
  FsmState next;
  bool turn_started = false;  // this step passed through PickDirection
};

// Signed heading error target - heading, wrapped to [-pi, pi).
double attitude_error(double target, double heading);

StepOutput fsm_step(const FsmState& fsm, double disparity, double heading,
                    const BehaviorConfig& cfg, Rng& rng);

}  // namespace pssl::behavior

#endif  // PSSL_BEHAVIOR_HPP
