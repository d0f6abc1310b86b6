#include "lidarnav/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace lidarnav {

namespace {

constexpr double kPi = std::numbers::pi;

bool strictly_inside(const RobotBody& body, Vec2 p) {
  if (const auto* c = std::get_if<Circle>(&body.shape)) {
    return p.x * p.x + p.y * p.y < c->radius * c->radius;
  }
  const auto& r = std::get<Rectangle>(body.shape);
  return std::abs(p.x) < 0.5 * r.length && std::abs(p.y) < 0.5 * r.width;
}

}  // namespace

double norm(Vec2 v) { return std::hypot(v.x, v.y); }

double wrap_angle(double angle) {
  double a = std::remainder(angle, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

Vec2 Pose::to_world(Vec2 local) const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {x + c * local.x - s * local.y, y + s * local.x + c * local.y};
}

// ---------------------------------------------------------------------------
// OccupancyGrid

OccupancyGrid::OccupancyGrid(int width_cells, int height_cells, double resolution, Vec2 origin)
    : OccupancyGrid(width_cells, height_cells, resolution, origin,
                    std::vector<std::uint8_t>(
                        static_cast<std::size_t>(std::max(width_cells, 0)) *
                            static_cast<std::size_t>(std::max(height_cells, 0)),
                        0)) {}

OccupancyGrid::OccupancyGrid(int width_cells, int height_cells, double resolution, Vec2 origin,
                             std::vector<std::uint8_t> cells)
    : width_(width_cells),
      height_(height_cells),
      resolution_(resolution),
      origin_(origin),
      cells_(std::move(cells)) {
  if (width_ <= 0 || height_ <= 0) throw std::invalid_argument("grid dimensions must be positive");
  if (!(resolution_ > 0.0) || !std::isfinite(resolution_)) {
    throw std::invalid_argument("grid resolution must be positive");
  }
  if (cells_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_)) {
    throw std::invalid_argument("cell count does not match width*height");
  }
}

double OccupancyGrid::diagonal_m() const { return std::hypot(width_m(), height_m()); }

void OccupancyGrid::set_occupied(int cx, int cy, bool value) {
  if (!in_bounds(cx, cy)) throw std::out_of_range("cell index outside grid");
  cells_[static_cast<std::size_t>(cy) * width_ + cx] = value ? 1 : 0;
}

void OccupancyGrid::fill_box(Vec2 lo, Vec2 hi) {
  for (int cy = 0; cy < height_; ++cy) {
    const double yc = origin_.y + (cy + 0.5) * resolution_;
    if (yc < lo.y || yc > hi.y) continue;
    for (int cx = 0; cx < width_; ++cx) {
      const double xc = origin_.x + (cx + 0.5) * resolution_;
      if (xc >= lo.x && xc <= hi.x) set_occupied(cx, cy, true);
    }
  }
}

bool OccupancyGrid::contains(Vec2 p) const {
  return p.x >= origin_.x && p.y >= origin_.y && p.x < origin_.x + width_m() &&
         p.y < origin_.y + height_m();
}

int OccupancyGrid::cell_x(double x) const {
  const double g = std::floor((x - origin_.x) / resolution_);
  return static_cast<int>(std::clamp(g, -1.0, static_cast<double>(width_)));
}

int OccupancyGrid::cell_y(double y) const {
  const double g = std::floor((y - origin_.y) / resolution_);
  return static_cast<int>(std::clamp(g, -1.0, static_cast<double>(height_)));
}

std::size_t OccupancyGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count_if(cells_.begin(), cells_.end(),
                                                [](std::uint8_t c) { return c != 0; }));
}

// ---------------------------------------------------------------------------
// Map files

OccupancyGrid parse_map(std::istream& in) {
  double resolution = 0.0;
  int width = -1;
  int height = -1;
  Vec2 origin{};
  bool have_res = false;
  std::string line;
  std::vector<std::string> rows;

  auto strip = [](std::string& s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  };

  while (std::getline(in, line)) {
    strip(line);
    if (line.empty()) continue;
    if (line[0] == '.' || line[0] == '#') {
      rows.push_back(line);
      continue;
    }
    if (!rows.empty()) throw std::runtime_error("map header after grid rows");
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "resolution") {
      ls >> resolution;
      have_res = true;
    } else if (key == "width") {
      ls >> width;
    } else if (key == "height") {
      ls >> height;
    } else if (key == "origin") {
      ls >> origin.x >> origin.y;
    } else {
      throw std::runtime_error("unknown map header key: " + key);
    }
    if (ls.fail()) throw std::runtime_error("malformed map header line: " + line);
  }

  if (!have_res || width <= 0 || height <= 0) {
    throw std::runtime_error("map header requires resolution, width and height");
  }
  if (static_cast<int>(rows.size()) != height) {
    throw std::runtime_error("map has " + std::to_string(rows.size()) + " rows, header says " +
                             std::to_string(height));
  }

  std::vector<std::uint8_t> cells(static_cast<std::size_t>(width) * height, 0);
  for (int r = 0; r < height; ++r) {
    const std::string& row = rows[static_cast<std::size_t>(r)];
    if (static_cast<int>(row.size()) != width) throw std::runtime_error("ragged row");
    const int cy = height - 1 - r;
    for (int cx = 0; cx < width; ++cx) {
      const char ch = row[static_cast<std::size_t>(cx)];
      if (ch != '.' && ch != '#') throw std::runtime_error("invalid map character");
      cells[static_cast<std::size_t>(cy) * width + cx] = ch == '#' ? 1 : 0;
    }
  }
  return OccupancyGrid(width, height, resolution, origin, std::move(cells));
}

OccupancyGrid load_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open map file: " + path);
  return parse_map(in);
}

void write_map(std::ostream& out, const OccupancyGrid& grid) {
  out << "resolution " << grid.resolution() << "\n";
  out << "width " << grid.width() << "\n";
  out << "height " << grid.height() << "\n";
  if (grid.origin().x != 0.0 || grid.origin().y != 0.0) {
    out << "origin " << grid.origin().x << " " << grid.origin().y << "\n";
  }
  for (int cy = grid.height() - 1; cy >= 0; --cy) {
    std::string row(static_cast<std::size_t>(grid.width()), '.');
    for (int cx = 0; cx < grid.width(); ++cx) {
      if (grid.occupied(cx, cy)) row[static_cast<std::size_t>(cx)] = '#';
    }
    out << row << "\n";
  }
}

// ---------------------------------------------------------------------------
// Robot geometry

void RobotBody::validate() const {
  if (const auto* c = std::get_if<Circle>(&shape)) {
    if (!(c->radius > 0.0)) throw std::invalid_argument("robot radius must be positive");
  } else {
    const auto& r = std::get<Rectangle>(shape);
    if (!(r.length > 0.0) || !(r.width > 0.0)) {
      throw std::invalid_argument("robot dimensions must be positive");
    }
  }
  if (!strictly_inside(*this, lidar_offset)) {
    throw std::invalid_argument("lidar mount lies outside the robot footprint");
  }
}

double RobotBody::bounding_radius() const {
  if (const auto* c = std::get_if<Circle>(&shape)) return c->radius;
  const auto& r = std::get<Rectangle>(shape);
  return 0.5 * std::hypot(r.length, r.width);
}

void LidarSpec::validate() const {
  if (n_beams < 2) throw std::invalid_argument("lidar needs at least two beams");
  if (!(fov > 0.0) || fov > 2.0 * kPi + 1e-12) throw std::invalid_argument("lidar fov out of range");
  if (!(max_range > 0.0)) throw std::invalid_argument("lidar max_range must be positive");
}

std::vector<double> LidarSpec::beam_angles() const {
  validate();
  std::vector<double> angles(static_cast<std::size_t>(n_beams));
  // A full circle would repeat the first beam at the last position.
  const bool full_circle = fov >= 2.0 * kPi - 1e-12;
  const double step = full_circle ? fov / n_beams : fov / (n_beams - 1);
  const double start = full_circle ? -0.5 * fov + 0.5 * step : -0.5 * fov;
  for (int i = 0; i < n_beams; ++i) angles[static_cast<std::size_t>(i)] = start + i * step;
  return angles;
}

double footprint_min_range(const RobotBody& body, double beam_angle) {
  const Vec2 u{std::cos(beam_angle), std::sin(beam_angle)};
  const Vec2 m = body.lidar_offset;
  if (const auto* c = std::get_if<Circle>(&body.shape)) {
    const double mu = m.x * u.x + m.y * u.y;
    const double c0 = m.x * m.x + m.y * m.y - c->radius * c->radius;
    return -mu + std::sqrt(mu * mu - c0);
  }
  const auto& r = std::get<Rectangle>(body.shape);
  const double hx = 0.5 * r.length;
  const double hy = 0.5 * r.width;
  double t = std::numeric_limits<double>::infinity();
  if (u.x > 0.0) t = std::min(t, (hx - m.x) / u.x);
  if (u.x < 0.0) t = std::min(t, (-hx - m.x) / u.x);
  if (u.y > 0.0) t = std::min(t, (hy - m.y) / u.y);
  if (u.y < 0.0) t = std::min(t, (-hy - m.y) / u.y);
  return t;
}

// ---------------------------------------------------------------------------
// Raycasting

double raycast(const OccupancyGrid& grid, Vec2 origin, double angle, double max_range) {
  if (!grid.contains(origin) || grid.occupied_at(origin)) {
    throw std::invalid_argument("invalid ray origin");
  }
  if (!(max_range >= 0.0)) throw std::invalid_argument("max_range must be non-negative");

  const double res = grid.resolution();
  const double gx = (origin.x - grid.origin().x) / res;
  const double gy = (origin.y - grid.origin().y) / res;
  int ix = grid.cell_x(origin.x);
  int iy = grid.cell_y(origin.y);
  const double dx = std::cos(angle);
  const double dy = std::sin(angle);
  const int step_x = dx > 0.0 ? 1 : (dx < 0.0 ? -1 : 0);
  const int step_y = dy > 0.0 ? 1 : (dy < 0.0 ? -1 : 0);
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Distances are recomputed from the origin at every crossing instead of
  // accumulated, so long rays do not drift.
  while (true) {
    const double tx =
        step_x == 0 ? kInf : ((step_x > 0 ? ix + 1.0 : static_cast<double>(ix)) - gx) * res / dx;
    const double ty =
        step_y == 0 ? kInf : ((step_y > 0 ? iy + 1.0 : static_cast<double>(iy)) - gy) * res / dy;
    const double t = std::min(tx, ty);
    if (t >= max_range) return max_range;
    if (tx < ty) {
      ix += step_x;
    } else if (ty < tx) {
      iy += step_y;
    } else {
      ix += step_x;
      iy += step_y;
    }
    if (grid.occupied(ix, iy)) return std::max(t, 0.0);
  }
}

LidarFrame scan(const OccupancyGrid& grid, const Pose& pose, const RobotBody& body,
                const LidarSpec& spec) {
  const std::vector<double> angles = spec.beam_angles();
  const Vec2 mount = pose.to_world(body.lidar_offset);
  LidarFrame frame;
  frame.ranges.resize(angles.size());
  frame.d_min.resize(angles.size());
  frame.d_max.assign(angles.size(), spec.max_range);
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double lo = footprint_min_range(body, angles[i]);
    const double d = raycast(grid, mount, pose.theta + angles[i], spec.max_range);
    frame.d_min[i] = lo;
    frame.ranges[i] = std::clamp(d, lo, spec.max_range);
  }
  return frame;
}

// ---------------------------------------------------------------------------
// Kinematics and collision

DiffDriveState step_kinematics(const DiffDriveState& state, double v_cmd, double omega_cmd,
                               double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  DiffDriveState next = state;
  next.v = std::clamp(v_cmd, state.limits.v_min, state.limits.v_max);
  next.omega = std::clamp(omega_cmd, -state.limits.omega_max, state.limits.omega_max);
  next.pose.x += next.v * std::cos(state.pose.theta) * dt;
  next.pose.y += next.v * std::sin(state.pose.theta) * dt;
  next.pose.theta = wrap_angle(state.pose.theta + next.omega * dt);
  return next;
}

bool collision_check(const OccupancyGrid& grid, const Pose& pose, const RobotBody& body) {
  const double res = grid.resolution();
  const Vec2 o = grid.origin();
  const double reach = body.bounding_radius();
  const int cx0 = grid.cell_x(pose.x - reach);
  const int cx1 = grid.cell_x(pose.x + reach);
  const int cy0 = grid.cell_y(pose.y - reach);
  const int cy1 = grid.cell_y(pose.y + reach);

  if (const auto* c = std::get_if<Circle>(&body.shape)) {
    const double r2 = c->radius * c->radius;
    for (int cy = cy0; cy <= cy1; ++cy) {
      const double y0 = o.y + cy * res;
      const double ny = std::clamp(pose.y, y0, y0 + res) - pose.y;
      for (int cx = cx0; cx <= cx1; ++cx) {
        if (!grid.occupied(cx, cy)) continue;
        const double x0 = o.x + cx * res;
        const double nx = std::clamp(pose.x, x0, x0 + res) - pose.x;
        if (nx * nx + ny * ny < r2) return true;
      }
    }
    return false;
  }

  // Separating-axis test between the oriented footprint and each cell square.
  const auto& rect = std::get<Rectangle>(body.shape);
  const double hx = 0.5 * rect.length;
  const double hy = 0.5 * rect.width;
  const Vec2 u{std::cos(pose.theta), std::sin(pose.theta)};
  const Vec2 v{-u.y, u.x};
  const double ext_x = hx * std::abs(u.x) + hy * std::abs(v.x);
  const double ext_y = hx * std::abs(u.y) + hy * std::abs(v.y);
  const double half = 0.5 * res;
  const double cell_ext_u = half * (std::abs(u.x) + std::abs(u.y));
  const double cell_ext_v = half * (std::abs(v.x) + std::abs(v.y));
  for (int cy = cy0; cy <= cy1; ++cy) {
    const double ccy = o.y + (cy + 0.5) * res;
    for (int cx = cx0; cx <= cx1; ++cx) {
      if (!grid.occupied(cx, cy)) continue;
      const double ccx = o.x + (cx + 0.5) * res;
      const Vec2 d{ccx - pose.x, ccy - pose.y};
      if (std::abs(d.x) >= half + ext_x) continue;
      if (std::abs(d.y) >= half + ext_y) continue;
      if (std::abs(d.x * u.x + d.y * u.y) >= hx + cell_ext_u) continue;
      if (std::abs(d.x * v.x + d.y * v.y) >= hy + cell_ext_v) continue;
      return true;
    }
  }
  return false;
}

}  // namespace lidarnav
