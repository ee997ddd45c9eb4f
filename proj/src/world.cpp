#include "pssl/world.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "pssl/error.hpp"

namespace pssl::sim {

namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw Error("invalid-config", std::string(field) + ": " + what);
}

double smooth_interp(double a, double b, double t) {
  const double s = t * t * (3.0 - 2.0 * t);
  return a + (b - a) * s;
}

}  // namespace

double deg_to_rad(double deg) { return deg * kPi / 180.0; }

double wrap_angle(double a) {
  const double two_pi = 2.0 * kPi;
  double w = a - two_pi * std::floor((a + kPi) / two_pi);
  if (w >= kPi) w -= two_pi;
  if (w < -kPi) w += two_pi;
  return w;
}

void WorldConfig::validate() const {
  require(width > 0.0 && std::isfinite(width), "world.width", "must be > 0");
  require(depth > 0.0 && std::isfinite(depth), "world.depth", "must be > 0");
  require(wall_height > 0.0, "world.wall_height", "must be > 0");
  require(camera_height > 0.0 && camera_height < wall_height, "world.camera_height",
          "must lie strictly between floor and ceiling");
  require(texture_scale > 0.0, "world.texture_scale", "must be > 0");
  require(texture_length >= 8, "world.texture_length", "must be >= 8");
  for (double shade : {floor_near, floor_far, ceiling_near, ceiling_far})
    require(shade >= 0.0 && shade <= 1.0, "world shading", "must lie in [0,1]");
  require(floor_texture_scale > 0.0, "world.floor_texture_scale", "must be > 0");
  require(floor_contrast >= 0.0 && floor_contrast <= 1.0, "world.floor_contrast", "must lie in [0,1]");
  require(wall_contrast_variation >= 0.0 && wall_contrast_variation <= 1.0,
          "world.wall_contrast_variation", "must lie in [0,1]");
  require(wall_brightness_variation >= 0.0 && wall_brightness_variation <= 1.0,
          "world.wall_brightness_variation", "must lie in [0,1]");
}

std::vector<double> make_wall_texture(int length, Rng& rng) {
  const std::array<int, 3> spacing{4, 16, 64};
  const std::array<double, 3> amplitude{0.5, 0.3, 0.2};
  std::vector<double> tex(static_cast<std::size_t>(length), 0.0);
  for (std::size_t o = 0; o < spacing.size(); ++o) {
    const int cells = std::max(1, length / spacing[o]);
    const double step = static_cast<double>(length) / cells;
    std::vector<double> lattice(static_cast<std::size_t>(cells));
    for (auto& v : lattice) v = rng.uniform();
    for (int i = 0; i < length; ++i) {
      const double pos = i / step;
      const int c0 = static_cast<int>(std::floor(pos));
      const double frac = pos - c0;
      const double a = lattice[static_cast<std::size_t>(c0 % cells)];
      const double b = lattice[static_cast<std::size_t>((c0 + 1) % cells)];
      tex[static_cast<std::size_t>(i)] += amplitude[o] * smooth_interp(a, b, frac);
    }
  }
  const auto [lo, hi] = std::minmax_element(tex.begin(), tex.end());
  const double mn = *lo;
  const double range = *hi - *lo;
  for (double& v : tex) v = range > 0.0 ? (v - mn) / range : 0.5;
  return tex;
}

std::vector<double> make_envelope(int length, int spacing, Rng& rng) {
  const int cells = std::max(1, length / std::max(1, spacing));
  const double step = static_cast<double>(length) / cells;
  std::vector<double> lattice(static_cast<std::size_t>(cells));
  for (auto& v : lattice) v = rng.uniform();
  std::vector<double> env(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) {
    const double pos = i / step;
    const int c0 = static_cast<int>(std::floor(pos));
    env[static_cast<std::size_t>(i)] =
        smooth_interp(lattice[static_cast<std::size_t>(c0 % cells)],
                      lattice[static_cast<std::size_t>((c0 + 1) % cells)], pos - c0);
  }
  return env;
}

World::World(WorldConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(cfg_.texture_seed);
  for (auto& tex : textures_) tex = make_wall_texture(cfg_.texture_length, rng);
  for (auto& env : contrast_) env = make_envelope(cfg_.texture_length, 128, rng);
  for (auto& env : brightness_) env = make_envelope(cfg_.texture_length, 128, rng);
  floor_ = make_wall_texture(cfg_.texture_length, rng);
}

double World::floor_intensity(double x, double y) const {
  const double n = static_cast<double>(floor_.size());
  auto sample = [&](double coord) {
    double u = std::fmod(coord, n);
    if (u < 0.0) u += n;
    const auto i0 = static_cast<std::size_t>(u);
    const double frac = u - static_cast<double>(i0);
    const double a = floor_[i0 % floor_.size()];
    const double b = floor_[(i0 + 1) % floor_.size()];
    return a + (b - a) * frac;
  };
  const double s = cfg_.floor_texture_scale;
  return 0.5 * (sample(x / s) + sample(y / s + n / 3.0));
}

double World::texel(Wall wall, double coord) const {
  const auto& tex = textures_[static_cast<int>(wall)];
  const double n = static_cast<double>(tex.size());
  double u = std::fmod(coord, n);
  if (u < 0.0) u += n;
  const auto i0 = static_cast<std::size_t>(u);
  const double frac = u - static_cast<double>(i0);
  const std::size_t a = i0 % tex.size();
  const std::size_t b = (i0 + 1) % tex.size();
  return tex[a] + (tex[b] - tex[a]) * frac;
}

double World::wall_intensity(Wall wall, double texcoord, double height) const {
  // Plaid of the wall's texture along and across: vertical detail lives in
  // metres on the wall, so its image-space frequency falls with proximity.
  const double across = height / cfg_.texture_scale + 0.5 * cfg_.texture_length;
  const double plaid = 0.5 * (texel(wall, texcoord) + texel(wall, across));
  if (cfg_.wall_contrast_variation == 0.0 && cfg_.wall_brightness_variation == 0.0) return plaid;
  // Slow envelopes along the wall: patches of low contrast and uneven light.
  const auto idx = static_cast<std::size_t>(static_cast<long long>(std::floor(texcoord)) %
                                                static_cast<long long>(cfg_.texture_length) +
                                            cfg_.texture_length) %
                   static_cast<std::size_t>(cfg_.texture_length);
  const int w = static_cast<int>(wall);
  const double contrast = 1.0 - cfg_.wall_contrast_variation * contrast_[w][idx];
  const double offset = cfg_.wall_brightness_variation * (brightness_[w][idx] - 0.5);
  return std::clamp(0.5 + contrast * (plaid - 0.5) + offset, 0.0, 1.0);
}

bool World::contains(double x, double y) const {
  return x > 0.0 && x < cfg_.width && y > 0.0 && y < cfg_.depth;
}

double CameraModel::focal_px() const { return 0.5 * width / std::tan(0.5 * hfov); }

double CameraModel::column_angle(int column) const {
  // Positive angles point left (counter-clockwise), column 0 is leftmost.
  const double offset = (column + 0.5) - 0.5 * width;
  return -std::atan(offset / focal_px());
}

void CameraModel::validate() const {
  require(hfov > 0.0 && hfov < kPi, "camera.hfov", "must lie in (0, pi)");
  require(width >= 5 && height >= 5, "camera.width/height", "must be at least 5 px");
  require(bf > 0.0, "camera.bf", "must be > 0");
  require(disparity_max > 0.0, "camera.disparity_max", "must be > 0");
  require(noise_sigma >= 0.0, "camera.noise_sigma", "must be >= 0");
}

RayHit raycast(const World& world, const DroneState& pose, double angle) {
  if (!world.contains(pose.x, pose.y))
    throw Error("out-of-bounds", "pose is outside the room");
  const double dir = pose.heading + angle;
  const double c = std::cos(dir);
  const double s = std::sin(dir);
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double tx = c > 0.0 ? (world.width() - pose.x) / c : c < 0.0 ? -pose.x / c : inf;
  const double ty = s > 0.0 ? (world.depth() - pose.y) / s : s < 0.0 ? -pose.y / s : inf;

  RayHit hit;
  const double scale = world.config().texture_scale;
  if (tx <= ty) {
    hit.distance = tx;
    hit.wall = c > 0.0 ? Wall::East : Wall::West;
    hit.texcoord = (pose.y + tx * s) / scale;
  } else {
    hit.distance = ty;
    hit.wall = s > 0.0 ? Wall::North : Wall::South;
    hit.texcoord = (pose.x + ty * c) / scale;
  }
  return hit;
}

std::vector<double> column_depths(const World& world, const DroneState& pose,
                                  const CameraModel& cam) {
  std::vector<double> depths(static_cast<std::size_t>(cam.width));
  for (int col = 0; col < cam.width; ++col) {
    const double a = cam.column_angle(col);
    depths[static_cast<std::size_t>(col)] = raycast(world, pose, a).distance * std::cos(a);
  }
  return depths;
}

Image render_view(const World& world, const DroneState& pose, const CameraModel& cam) {
  const auto& wc = world.config();
  const double focal = cam.focal_px();
  const double half_h = 0.5 * cam.height;
  Image img(cam.width, cam.height);

  std::vector<double> backdrop(static_cast<std::size_t>(cam.height));
  for (int r = 0; r < cam.height; ++r) {
    const double yr = (r + 0.5) - half_h;  // positive below the horizon
    const double s = std::abs(yr) / half_h;
    backdrop[static_cast<std::size_t>(r)] =
        yr < 0.0 ? wc.ceiling_far + (wc.ceiling_near - wc.ceiling_far) * s
                 : wc.floor_far + (wc.floor_near - wc.floor_far) * s;
  }

  for (int col = 0; col < cam.width; ++col) {
    const double a = cam.column_angle(col);
    const RayHit hit = raycast(world, pose, a);
    const double z = hit.distance * std::cos(a);
    for (int r = 0; r < cam.height; ++r) {
      const double yr = (r + 0.5) - half_h;
      const double height = wc.camera_height - yr * z / focal;
      double v;
      if (height < 0.0 && wc.floor_contrast > 0.0) {
        // floor point seen through this pixel
        const double ground = wc.camera_height * focal / yr / std::cos(a);
        const double dir = pose.heading + a;
        const double fx = pose.x + ground * std::cos(dir);
        const double fy = pose.y + ground * std::sin(dir);
        v = backdrop[static_cast<std::size_t>(r)] +
            wc.floor_contrast * (world.floor_intensity(fx, fy) - 0.5);
      } else if (height < 0.0 || height > wc.wall_height) {
        v = backdrop[static_cast<std::size_t>(r)];
      } else {
        v = world.wall_intensity(hit.wall, hit.texcoord, height);
      }
      img.at(col, r) = std::clamp(v, 0.0, 1.0);
    }
  }
  return img;
}

double stereo_disparity_true(const World& world, const DroneState& pose, const CameraModel& cam) {
  const auto depths = column_depths(world, pose, cam);
  double sum = 0.0;
  for (double z : depths) sum += std::clamp(cam.bf / z, 0.0, cam.disparity_max);
  return sum / static_cast<double>(depths.size());
}

double stereo_disparity(const World& world, const DroneState& pose, const CameraModel& cam,
                        Rng& rng) {
  const double truth = stereo_disparity_true(world, pose, cam);
  if (cam.noise_sigma <= 0.0) return truth;
  return std::clamp(truth + cam.noise_sigma * rng.gaussian(), 0.0, cam.disparity_max);
}

StepResult step_dynamics(const World& world, const DroneState& state, const Command& cmd,
                         double dt, double wall_margin) {
  if (!(dt > 0.0)) throw Error("invalid-argument", "dt must be > 0");
  StepResult out{state, false};
  if (cmd.kind == Command::Kind::Turn) {
    out.state.heading = wrap_angle(state.heading + cmd.rate * dt);
    return out;
  }
  const double dist = state.forward_speed * dt;
  double nx = state.x + dist * std::cos(state.heading);
  double ny = state.y + dist * std::sin(state.heading);
  const double lo_x = wall_margin, hi_x = world.width() - wall_margin;
  const double lo_y = wall_margin, hi_y = world.depth() - wall_margin;
  if (nx < lo_x || nx > hi_x || ny < lo_y || ny > hi_y) {
    out.contact = true;
    nx = std::clamp(nx, lo_x, hi_x);
    ny = std::clamp(ny, lo_y, hi_y);
  }
  out.state.x = nx;
  out.state.y = ny;
  out.state.heading = wrap_angle(state.heading);
  return out;
}

}  // namespace pssl::sim
