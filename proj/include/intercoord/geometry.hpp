#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace intercoord {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct LineSegment {
  Point2 from;
  Point2 to;
};

// Circular arc. A positive sweep runs counter-clockwise.
struct ArcSegment {
  Point2 center;
  double radius = 0.0;
  double start_angle = 0.0;
  double sweep = 0.0;
};

using PathSegment = std::variant<LineSegment, ArcSegment>;

double segment_length(const PathSegment& seg);
Point2 segment_point(const PathSegment& seg, double s);
Point2 segment_start(const PathSegment& seg);
Point2 segment_end(const PathSegment& seg);

enum class Leg { east = 0, north = 1, west = 2, south = 3 };
enum class Turn { left, straight, right };

char leg_letter(Leg leg);
Leg leg_from_letter(char c);

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A fixed route through the intersection, parameterized by arc length from
/// its spawn point. `approach_length` is the arc position that is treated as
/// the intersection center when converting "distance to center" readings.
class MovementPath {
 public:
  MovementPath(std::string id, Leg origin, Leg destination,
               std::vector<PathSegment> segments, double approach_length);

  const std::string& id() const { return id_; }
  Leg origin_leg() const { return origin_; }
  Leg destination_leg() const { return destination_; }
  Turn turn() const;
  bool right_turn() const { return turn() == Turn::right; }

  const std::vector<PathSegment>& segments() const { return segments_; }
  double segment_offset(std::size_t k) const { return offsets_[k]; }
  double total_length() const { return offsets_.back(); }
  double approach_length() const { return approach_length_; }

  // Clamped to [0, total_length].
  Point2 point_at(double s) const;

 private:
  std::string id_;
  Leg origin_;
  Leg destination_;
  std::vector<PathSegment> segments_;
  std::vector<double> offsets_;
  double approach_length_;
};

struct ConflictPoint {
  std::size_t first = 0;   // movement index, first < second
  std::size_t second = 0;
  double s_first = 0.0;    // arc length from each path's spawn point
  double s_second = 0.0;
  double half_width = 0.0;
  Point2 location;

  double s_of(std::size_t movement) const {
    return movement == first ? s_first : s_second;
  }
  std::size_t other(std::size_t movement) const {
    return movement == first ? second : first;
  }
};

struct ConflictSet {
  std::vector<std::vector<int>> matrix;
  std::vector<ConflictPoint> points;
};

/// Pairwise transversal crossings. Throws GeometryError for segment overlap,
/// tangential contact, or more than one crossing for a pair.
ConflictSet compute_conflicts(std::span<const MovementPath> paths, double half_width);

struct ConflictFrame {
  double l_prime = 0.0;
  double l_enter = 0.0;
  double l_safe = 0.0;
};

struct GeometryConfig {
  double lane_width = 3.5;
  double approach_length = 200.0;
  double exit_length = 60.0;
  double left_turn_radius = 0.0;  // 0 selects the radius joining the stop lines
  bool include_right_turns = false;
  double half_width = 0.0;        // 0 selects lane_width / 2
  double enter_margin = 0.0;
  double safe_margin = 1.0;
  std::vector<std::string> movements;  // empty selects the 4 straight + 4 left set
};

class IntersectionModel {
 public:
  IntersectionModel(std::vector<MovementPath> movements,
                    std::vector<MovementPath> exempt, double half_width,
                    double enter_margin, double safe_margin);

  std::size_t size() const { return movements_.size(); }
  const std::vector<MovementPath>& movements() const { return movements_; }
  const MovementPath& movement(std::size_t i) const { return movements_.at(i); }
  // Right turns: generated, never coordinated.
  const std::vector<MovementPath>& exempt_movements() const { return exempt_; }
  std::optional<std::size_t> index_of(const std::string& id) const;

  const std::vector<std::vector<int>>& conflict_matrix() const { return conflicts_.matrix; }
  const std::vector<ConflictPoint>& conflicts() const { return conflicts_.points; }
  const std::vector<std::size_t>& conflicts_of(std::size_t movement) const {
    return by_movement_.at(movement);
  }
  std::optional<std::size_t> conflict_between(std::size_t i, std::size_t j) const;

  double half_width() const { return half_width_; }
  double enter_margin() const { return enter_margin_; }
  double safe_margin() const { return safe_margin_; }

  double l_enter(double vehicle_length) const;
  double l_safe(double vehicle_length) const;

  // Nullopt means the vehicle is already past the conflict point.
  std::optional<ConflictFrame> conflict_frame(std::size_t movement, double distance_to_center,
                                              std::size_t conflict,
                                              double vehicle_length) const;
  std::optional<ConflictFrame> frame_at_arc(std::size_t movement, double arc_position,
                                            std::size_t conflict,
                                            double vehicle_length) const;

  // Arc position at which a vehicle of this length has cleared every conflict
  // point of the movement.
  double exit_arc(std::size_t movement, double vehicle_length) const;

 private:
  std::vector<MovementPath> movements_;
  std::vector<MovementPath> exempt_;
  ConflictSet conflicts_;
  std::vector<std::vector<std::size_t>> by_movement_;
  double half_width_;
  double enter_margin_;
  double safe_margin_;
};

MovementPath make_movement(const GeometryConfig& config, Leg origin, Turn turn);
IntersectionModel build_intersection(const GeometryConfig& config);

}  // namespace intercoord
