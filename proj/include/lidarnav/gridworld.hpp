#pragma once

#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

namespace lidarnav {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }

double norm(Vec2 v);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 position() const { return {x, y}; }
  /// Maps a point from the robot frame (x forward, y left) into the world frame.
  Vec2 to_world(Vec2 local) const;
};

/// Binary obstacle raster. Cell (0, 0) has its lower-left corner at `origin`;
/// cell (cx, cy) covers [origin.x + cx*res, origin.x + (cx+1)*res) and likewise
/// in y. Everything outside the raster counts as occupied.
class OccupancyGrid {
 public:
  OccupancyGrid(int width_cells, int height_cells, double resolution, Vec2 origin = {});
  OccupancyGrid(int width_cells, int height_cells, double resolution, Vec2 origin,
                std::vector<std::uint8_t> cells);

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  Vec2 origin() const { return origin_; }
  double width_m() const { return width_ * resolution_; }
  double height_m() const { return height_ * resolution_; }
  double diagonal_m() const;

  bool in_bounds(int cx, int cy) const {
    return cx >= 0 && cy >= 0 && cx < width_ && cy < height_;
  }
  /// Out-of-bounds cells report occupied.
  bool occupied(int cx, int cy) const {
    return !in_bounds(cx, cy) || cells_[static_cast<std::size_t>(cy) * width_ + cx] != 0;
  }
  void set_occupied(int cx, int cy, bool value);
  /// Marks every cell whose center lies inside [lo, hi] as occupied.
  void fill_box(Vec2 lo, Vec2 hi);

  bool contains(Vec2 p) const;
  int cell_x(double x) const;
  int cell_y(double y) const;
  bool occupied_at(Vec2 p) const { return occupied(cell_x(p.x), cell_y(p.y)); }

  std::size_t occupied_count() const;
  const std::vector<std::uint8_t>& cells() const { return cells_; }

 private:
  int width_;
  int height_;
  double resolution_;
  Vec2 origin_;
  std::vector<std::uint8_t> cells_;
};

/// Plain-text map: `resolution <m>`, `width <cells>`, `height <cells>` and an
/// optional `origin <x> <y>` header, then `height` rows of `.`/`#`. The first
/// row is the top of the map (largest y).
OccupancyGrid parse_map(std::istream& in);
OccupancyGrid load_map(const std::string& path);
void write_map(std::ostream& out, const OccupancyGrid& grid);

struct Circle {
  double radius = 0.2;
};

/// Axis-aligned with the robot frame: `length` along x (heading), `width` along y.
struct Rectangle {
  double length = 0.455;
  double width = 0.381;
};

struct RobotBody {
  std::variant<Circle, Rectangle> shape = Circle{};
  Vec2 lidar_offset{};

  /// Throws std::invalid_argument on non-positive dimensions or a mount point
  /// outside the footprint.
  void validate() const;
  /// Radius of the smallest robot-centred disk covering the footprint.
  double bounding_radius() const;
};

struct LidarSpec {
  double fov = 1.5 * std::numbers::pi;
  int n_beams = 180;
  double max_range = 30.0;

  void validate() const;
  /// Robot-frame beam angles, strictly increasing and centred on the heading.
  std::vector<double> beam_angles() const;
};

/// One sweep: per-beam distances plus the per-beam measuring bounds.
struct LidarFrame {
  std::vector<double> ranges;
  std::vector<double> d_min;
  std::vector<double> d_max;

  std::size_t size() const { return ranges.size(); }
};

struct VelocityLimits {
  double v_min = -0.5;
  double v_max = 0.5;
  double omega_max = std::numbers::pi / 2.0;
};

struct DiffDriveState {
  Pose pose;
  double v = 0.0;
  double omega = 0.0;
  VelocityLimits limits;
};

/// Distance along the ray to the first occupied cell boundary, or `max_range`.
/// Cells are walked exactly (Amanatides-Woo traversal). Throws
/// std::invalid_argument("invalid ray origin") when the origin is outside the
/// grid or inside an occupied cell.
double raycast(const OccupancyGrid& grid, Vec2 origin, double angle, double max_range);

/// Distance from the lidar mount to the robot's own boundary along a beam
/// given in the robot frame.
double footprint_min_range(const RobotBody& body, double beam_angle);

LidarFrame scan(const OccupancyGrid& grid, const Pose& pose, const RobotBody& body,
                const LidarSpec& spec);

DiffDriveState step_kinematics(const DiffDriveState& state, double v_cmd, double omega_cmd,
                               double dt);

/// True iff an occupied cell (or the outside of the map) overlaps the footprint
/// with positive area.
bool collision_check(const OccupancyGrid& grid, const Pose& pose, const RobotBody& body);

}  // namespace lidarnav
