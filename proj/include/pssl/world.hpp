#ifndef PSSL_WORLD_HPP
#define PSSL_WORLD_HPP

// Simulated room, drone kinematics, column-raycast rendering and the stereo
// average-disparity oracle.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pssl/image.hpp"
#include "pssl/random.hpp"

namespace pssl::sim {

inline constexpr double kPi = 3.14159265358979323846;

double deg_to_rad(double deg);
// Wraps into [-pi, pi).
double wrap_angle(double a);

struct WorldConfig {
  double width = 10.0;  // m, along x
  double depth = 10.0;  // m, along y
  double wall_height = 2.5;
  double camera_height = 1.25;
  double texture_scale = 0.02;  // m per texel
  int texture_length = 512;     // texels; textures wrap with this period
  std::uint64_t texture_seed = 7;
  double floor_near = 0.30;    // floor shade at the bottom image row
  double floor_far = 0.45;     // floor shade at the horizon
  double ceiling_near = 0.85;  // ceiling shade at the top image row
  double ceiling_far = 0.70;
  double floor_texture_scale = 0.05;  // m per floor texel
  double floor_contrast = 0.3;        // amplitude of the carpet pattern
  double wall_contrast_variation = 0.7;    // 0: uniform contrast along walls
  double wall_brightness_variation = 0.3;  // peak-to-peak brightness drift

  // Throws pssl::Error("invalid-config") with the offending field.
  void validate() const;
};

enum class Wall { East = 0, North = 1, West = 2, South = 3 };

// Immutable after construction: room geometry plus one periodic,
// band-limited value-noise texture per wall.
class World {
 public:
  explicit World(WorldConfig cfg = {});

  const WorldConfig& config() const { return cfg_; }
  double width() const { return cfg_.width; }
  double depth() const { return cfg_.depth; }

  const std::vector<double>& texture(Wall wall) const {
    return textures_[static_cast<int>(wall)];
  }
  double floor_intensity(double x, double y) const;
  // Linear interpolation at a continuous texel coordinate, wrapping.
  double texel(Wall wall, double coord) const;
  // Wall appearance at (along-wall texcoord, height in m).
  double wall_intensity(Wall wall, double texcoord, double height) const;

  bool contains(double x, double y) const;

 private:
  WorldConfig cfg_;
  std::array<std::vector<double>, 4> textures_;
  std::array<std::vector<double>, 4> contrast_;
  std::array<std::vector<double>, 4> brightness_;
  std::vector<double> floor_;
};

// Periodic value noise in [0, 1] with octave lattices of 4, 16 and 64 texels.
std::vector<double> make_wall_texture(int length, Rng& rng);
// Periodic, slowly varying noise in [0, 1] (lattice of `spacing` texels).
std::vector<double> make_envelope(int length, int spacing, Rng& rng);

struct DroneState {
  double x = 5.0;
  double y = 5.0;
  double heading = 0.0;  // rad, 0 faces +x
  double forward_speed = 0.5;
};

struct CameraModel {
  double hfov = deg_to_rad(60.0);
  int width = 128;
  int height = 96;
  double bf = 10.0;  // px * m
  double disparity_max = 32.0;
  double noise_sigma = 0.25;

  double focal_px() const;
  // Camera-frame bearing of the center of pixel column c.
  double column_angle(int column) const;
  void validate() const;
};

struct RayHit {
  double distance = 0.0;  // m along the ray
  double texcoord = 0.0;  // texels along the wall
  Wall wall = Wall::East;
};

// angle is relative to pose.heading. Throws pssl::Error("out-of-bounds").
RayHit raycast(const World& world, const DroneState& pose, double angle);

// Depth along the optical axis for every pixel column.
std::vector<double> column_depths(const World& world, const DroneState& pose,
                                  const CameraModel& cam);

Image render_view(const World& world, const DroneState& pose, const CameraModel& cam);

// Mean over columns of clip(bf / depth, 0, disparity_max).
double stereo_disparity_true(const World& world, const DroneState& pose, const CameraModel& cam);
// Adds N(0, noise_sigma) and clips again; noise_sigma == 0 draws nothing.
double stereo_disparity(const World& world, const DroneState& pose, const CameraModel& cam,
                        Rng& rng);

struct Command {
  enum class Kind { Forward, Turn };
  Kind kind = Kind::Forward;
  double rate = 0.0;  // rad/s, signed; only for Turn

  static Command forward() { return {}; }
  static Command turn(double rate) { return {Kind::Turn, rate}; }
  bool operator==(const Command&) const = default;
};

struct StepResult {
  DroneState state;
  bool contact = false;  // motion was clamped at the wall margin
};

// Throws pssl::Error("invalid-argument") for dt <= 0.
StepResult step_dynamics(const World& world, const DroneState& state, const Command& cmd,
                         double dt, double wall_margin = 0.1);

}  // namespace pssl::sim

#endif  // PSSL_WORLD_HPP
