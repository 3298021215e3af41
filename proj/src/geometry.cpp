#include "intercoord/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace intercoord {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kJoinTol = 1e-6;

Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
Point2 operator*(double k, Point2 a) { return {k * a.x, k * a.y}; }
double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
double norm(Point2 a) { return std::hypot(a.x, a.y); }

double wrap_positive(double angle) {
  double a = std::fmod(angle, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;
}

// Arc-length offset of `angle` along the arc, or nullopt when off the arc.
std::optional<double> arc_offset(const ArcSegment& arc, double angle, double tol) {
  const double delta = arc.sweep >= 0.0 ? wrap_positive(angle - arc.start_angle)
                                        : wrap_positive(arc.start_angle - angle);
  const double span = std::abs(arc.sweep);
  const double angular_tol = tol / arc.radius;
  if (delta <= span + angular_tol) return std::min(delta, span) * arc.radius;
  // Just below the start angle wraps around to ~2*pi.
  if (delta >= kTwoPi - angular_tol) return 0.0;
  return std::nullopt;
}

struct LocalHit {
  double s_a;
  double s_b;
  Point2 at;
};

void line_line(const LineSegment& a, const LineSegment& b, std::vector<LocalHit>& out) {
  const Point2 d1 = a.to - a.from;
  const Point2 d2 = b.to - b.from;
  const double len1 = norm(d1);
  const double len2 = norm(d2);
  const double denom = cross(d1, d2);
  const Point2 w = b.from - a.from;
  if (std::abs(denom) <= 1e-12 * len1 * len2) {
    if (std::abs(cross(w, d1)) > kJoinTol * len1) return;  // parallel, apart
    const double t0 = dot(b.from - a.from, d1) / (len1 * len1);
    const double t1 = dot(b.to - a.from, d1) / (len1 * len1);
    const double lo = std::max(0.0, std::min(t0, t1));
    const double hi = std::min(1.0, std::max(t0, t1));
    if ((hi - lo) * len1 > kJoinTol) {
      throw GeometryError("collinear overlap between path segments (merging movements)");
    }
    return;
  }
  const double t = cross(w, d2) / denom;
  const double u = cross(w, d1) / denom;
  const double ta = kJoinTol / len1;
  const double tb = kJoinTol / len2;
  if (t < -ta || t > 1.0 + ta || u < -tb || u > 1.0 + tb) return;
  const double tc = std::clamp(t, 0.0, 1.0);
  const double uc = std::clamp(u, 0.0, 1.0);
  out.push_back({tc * len1, uc * len2, a.from + tc * d1});
}

// Hits are reported with s_a on the line and s_b on the arc.
void line_arc(const LineSegment& line, const ArcSegment& arc, std::vector<LocalHit>& out) {
  const Point2 d = line.to - line.from;
  const double len = norm(d);
  const Point2 f = line.from - arc.center;
  const double qa = dot(d, d);
  const double qb = 2.0 * dot(f, d);
  const double qc = dot(f, f) - arc.radius * arc.radius;
  const double disc = qb * qb - 4.0 * qa * qc;
  // Distance of closest approach relative to the radius decides tangency.
  const double closest = std::abs(cross(f, d)) / len;
  if (std::abs(closest - arc.radius) <= kJoinTol) {
    const double t = -qb / (2.0 * qa);
    if (t < 0.0 || t > 1.0) return;
    const Point2 p = line.from + t * d;
    if (arc_offset(arc, std::atan2(p.y - arc.center.y, p.x - arc.center.x), kJoinTol)) {
      throw GeometryError("tangential contact between a line and an arc");
    }
    return;
  }
  if (disc < 0.0) return;
  const double root = std::sqrt(disc);
  const double tol = kJoinTol / len;
  for (double t : {(-qb - root) / (2.0 * qa), (-qb + root) / (2.0 * qa)}) {
    if (t < -tol || t > 1.0 + tol) continue;
    const double tc = std::clamp(t, 0.0, 1.0);
    const Point2 p = line.from + tc * d;
    const auto s_arc = arc_offset(arc, std::atan2(p.y - arc.center.y, p.x - arc.center.x), kJoinTol);
    if (s_arc) out.push_back({tc * len, *s_arc, p});
  }
}

void arc_arc(const ArcSegment& a, const ArcSegment& b, std::vector<LocalHit>& out) {
  const Point2 dc = b.center - a.center;
  const double dist = norm(dc);
  if (dist <= kJoinTol && std::abs(a.radius - b.radius) <= kJoinTol) {
    // Same circle: any shared angular range is an overlap.
    const double mid_b = b.start_angle + 0.5 * b.sweep;
    const double span = std::abs(b.sweep) * b.radius;
    for (double probe : {mid_b, b.start_angle, b.start_angle + b.sweep}) {
      if (arc_offset(a, probe, kJoinTol)) {
        if (span > kJoinTol) {
          throw GeometryError("overlapping arcs on the same circle (merging movements)");
        }
      }
    }
    return;
  }
  if (dist > a.radius + b.radius + kJoinTol || dist < std::abs(a.radius - b.radius) - kJoinTol) {
    return;
  }
  if (std::abs(dist - (a.radius + b.radius)) <= kJoinTol ||
      std::abs(dist - std::abs(a.radius - b.radius)) <= kJoinTol) {
    const Point2 p = a.center + (a.radius / dist) * dc;
    if (arc_offset(a, std::atan2(p.y - a.center.y, p.x - a.center.x), kJoinTol) &&
        arc_offset(b, std::atan2(p.y - b.center.y, p.x - b.center.x), kJoinTol)) {
      throw GeometryError("tangential contact between two arcs");
    }
    return;
  }
  const double along = (a.radius * a.radius - b.radius * b.radius + dist * dist) / (2.0 * dist);
  const double h = std::sqrt(std::max(0.0, a.radius * a.radius - along * along));
  const Point2 base = a.center + (along / dist) * dc;
  const Point2 perp{-dc.y / dist, dc.x / dist};
  for (double sign : {-1.0, 1.0}) {
    const Point2 p = base + (sign * h) * perp;
    const auto sa = arc_offset(a, std::atan2(p.y - a.center.y, p.x - a.center.x), kJoinTol);
    const auto sb = arc_offset(b, std::atan2(p.y - b.center.y, p.x - b.center.x), kJoinTol);
    if (sa && sb) out.push_back({*sa, *sb, p});
  }
}

std::vector<LocalHit> intersect(const PathSegment& a, const PathSegment& b) {
  std::vector<LocalHit> hits;
  if (const auto* la = std::get_if<LineSegment>(&a)) {
    if (const auto* lb = std::get_if<LineSegment>(&b)) {
      line_line(*la, *lb, hits);
    } else {
      line_arc(*la, std::get<ArcSegment>(b), hits);
    }
  } else {
    const auto& aa = std::get<ArcSegment>(a);
    if (const auto* lb = std::get_if<LineSegment>(&b)) {
      std::vector<LocalHit> tmp;
      line_arc(*lb, aa, tmp);
      for (const auto& h : tmp) hits.push_back({h.s_b, h.s_a, h.at});
    } else {
      arc_arc(aa, std::get<ArcSegment>(b), hits);
    }
  }
  return hits;
}

struct PathHit {
  double s_a;
  double s_b;
  Point2 at;
};

std::vector<PathHit> path_crossings(const MovementPath& a, const MovementPath& b) {
  std::vector<PathHit> hits;
  for (std::size_t ka = 0; ka < a.segments().size(); ++ka) {
    for (std::size_t kb = 0; kb < b.segments().size(); ++kb) {
      for (const auto& h : intersect(a.segments()[ka], b.segments()[kb])) {
        const PathHit hit{a.segment_offset(ka) + h.s_a, b.segment_offset(kb) + h.s_b, h.at};
        // A crossing exactly on a segment joint shows up once per segment.
        const bool duplicate = std::any_of(hits.begin(), hits.end(), [&](const PathHit& o) {
          return norm(o.at - hit.at) <= 10.0 * kJoinTol;
        });
        if (!duplicate) hits.push_back(hit);
      }
    }
  }
  return hits;
}

Point2 rotate_quarter(Point2 p, int quarters) {
  switch (((quarters % 4) + 4) % 4) {
    case 1: return {-p.y, p.x};
    case 2: return {-p.x, -p.y};
    case 3: return {p.y, -p.x};
    default: return p;
  }
}

PathSegment rotate_segment(const PathSegment& seg, int quarters) {
  if (const auto* line = std::get_if<LineSegment>(&seg)) {
    return LineSegment{rotate_quarter(line->from, quarters), rotate_quarter(line->to, quarters)};
  }
  const auto& arc = std::get<ArcSegment>(seg);
  return ArcSegment{rotate_quarter(arc.center, quarters), arc.radius,
                    arc.start_angle + quarters * 0.5 * kPi, arc.sweep};
}

Leg destination_of(Leg origin, Turn turn) {
  const int k = static_cast<int>(origin);
  switch (turn) {
    case Turn::straight: return static_cast<Leg>((k + 2) % 4);
    case Turn::left: return static_cast<Leg>((k + 3) % 4);
    case Turn::right: break;
  }
  return static_cast<Leg>((k + 1) % 4);
}

}  // namespace

double segment_length(const PathSegment& seg) {
  if (const auto* line = std::get_if<LineSegment>(&seg)) return norm(line->to - line->from);
  const auto& arc = std::get<ArcSegment>(seg);
  return arc.radius * std::abs(arc.sweep);
}

Point2 segment_point(const PathSegment& seg, double s) {
  if (const auto* line = std::get_if<LineSegment>(&seg)) {
    const double len = norm(line->to - line->from);
    return line->from + (s / len) * (line->to - line->from);
  }
  const auto& arc = std::get<ArcSegment>(seg);
  const double angle = arc.start_angle + std::copysign(s / arc.radius, arc.sweep);
  return {arc.center.x + arc.radius * std::cos(angle), arc.center.y + arc.radius * std::sin(angle)};
}

Point2 segment_start(const PathSegment& seg) { return segment_point(seg, 0.0); }
Point2 segment_end(const PathSegment& seg) { return segment_point(seg, segment_length(seg)); }

char leg_letter(Leg leg) {
  static constexpr char kLetters[] = {'E', 'N', 'W', 'S'};
  return kLetters[static_cast<int>(leg)];
}

Leg leg_from_letter(char c) {
  switch (c) {
    case 'E': return Leg::east;
    case 'N': return Leg::north;
    case 'W': return Leg::west;
    case 'S': return Leg::south;
    default: break;
  }
  throw GeometryError(std::string("unknown leg letter '") + c + "'");
}

MovementPath::MovementPath(std::string id, Leg origin, Leg destination,
                           std::vector<PathSegment> segments, double approach_length)
    : id_(std::move(id)),
      origin_(origin),
      destination_(destination),
      segments_(std::move(segments)),
      approach_length_(approach_length) {
  if (origin_ == destination_) throw GeometryError("movement " + id_ + " is a U-turn");
  if (segments_.empty()) throw GeometryError("movement " + id_ + " has no segments");
  offsets_.reserve(segments_.size() + 1);
  offsets_.push_back(0.0);
  for (std::size_t k = 0; k < segments_.size(); ++k) {
    const double len = segment_length(segments_[k]);
    if (!(len > 0.0)) throw GeometryError("movement " + id_ + " has a degenerate segment");
    if (k > 0 && norm(segment_end(segments_[k - 1]) - segment_start(segments_[k])) > 1e-6) {
      throw GeometryError("movement " + id_ + " is not continuous");
    }
    offsets_.push_back(offsets_.back() + len);
  }
  for (std::size_t a = 0; a < segments_.size(); ++a) {
    for (std::size_t b = a + 2; b < segments_.size(); ++b) {
      if (!intersect(segments_[a], segments_[b]).empty()) {
        throw GeometryError("movement " + id_ + " self-intersects");
      }
    }
  }
}

Turn MovementPath::turn() const {
  const int delta = (static_cast<int>(destination_) - static_cast<int>(origin_) + 4) % 4;
  if (delta == 2) return Turn::straight;
  if (delta == 3) return Turn::left;
  return Turn::right;
}

Point2 MovementPath::point_at(double s) const {
  s = std::clamp(s, 0.0, total_length());
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), s);
  std::size_t k = static_cast<std::size_t>(std::distance(offsets_.begin(), it));
  k = std::min(k == 0 ? 0 : k - 1, segments_.size() - 1);
  return segment_point(segments_[k], s - offsets_[k]);
}

ConflictSet compute_conflicts(std::span<const MovementPath> paths, double half_width) {
  ConflictSet out;
  const std::size_t n = paths.size();
  out.matrix.assign(n, std::vector<int>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto hits = path_crossings(paths[i], paths[j]);
      if (hits.empty()) continue;
      if (hits.size() > 1) {
        throw GeometryError("movements " + paths[i].id() + " and " + paths[j].id() +
                            " cross more than once");
      }
      const auto& h = hits.front();
      if (h.s_a <= 0.0 || h.s_a >= paths[i].total_length() || h.s_b <= 0.0 ||
          h.s_b >= paths[j].total_length()) {
        throw GeometryError("movements " + paths[i].id() + " and " + paths[j].id() +
                            " touch at an end point");
      }
      out.matrix[i][j] = out.matrix[j][i] = 1;
      out.points.push_back({i, j, h.s_a, h.s_b, half_width, h.at});
    }
  }
  return out;
}

IntersectionModel::IntersectionModel(std::vector<MovementPath> movements,
                                     std::vector<MovementPath> exempt, double half_width,
                                     double enter_margin, double safe_margin)
    : movements_(std::move(movements)),
      exempt_(std::move(exempt)),
      half_width_(half_width),
      enter_margin_(enter_margin),
      safe_margin_(safe_margin) {
  if (!(half_width_ > 0.0)) throw GeometryError("half_width must be positive");
  if (enter_margin_ < 0.0) throw GeometryError("enter_margin must be non-negative");
  if (safe_margin_ < enter_margin_) {
    throw GeometryError("safe_margin must be at least enter_margin");
  }
  for (std::size_t i = 0; i < movements_.size(); ++i) {
    if (movements_[i].right_turn()) {
      throw GeometryError("right turn " + movements_[i].id() + " cannot be coordinated");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (movements_[i].id() == movements_[j].id()) {
        throw GeometryError("duplicate movement " + movements_[i].id());
      }
    }
  }
  conflicts_ = compute_conflicts(movements_, half_width_);
  by_movement_.resize(movements_.size());
  for (std::size_t k = 0; k < conflicts_.points.size(); ++k) {
    by_movement_[conflicts_.points[k].first].push_back(k);
    by_movement_[conflicts_.points[k].second].push_back(k);
  }
}

std::optional<std::size_t> IntersectionModel::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < movements_.size(); ++i) {
    if (movements_[i].id() == id) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> IntersectionModel::conflict_between(std::size_t i,
                                                               std::size_t j) const {
  for (std::size_t k : by_movement_.at(i)) {
    if (conflicts_.points[k].other(i) == j) return k;
  }
  return std::nullopt;
}

double IntersectionModel::l_enter(double vehicle_length) const {
  return half_width_ + 0.5 * vehicle_length + enter_margin_;
}

double IntersectionModel::l_safe(double vehicle_length) const {
  return half_width_ + 0.5 * vehicle_length + safe_margin_;
}

std::optional<ConflictFrame> IntersectionModel::frame_at_arc(std::size_t movement,
                                                             double arc_position,
                                                             std::size_t conflict,
                                                             double vehicle_length) const {
  const auto& cp = conflicts_.points.at(conflict);
  if (cp.first != movement && cp.second != movement) {
    throw GeometryError("conflict point does not lie on movement " + movements_.at(movement).id());
  }
  const double l_prime = cp.s_of(movement) - arc_position;
  if (l_prime < 0.0) return std::nullopt;
  return ConflictFrame{l_prime, l_enter(vehicle_length), l_safe(vehicle_length)};
}

std::optional<ConflictFrame> IntersectionModel::conflict_frame(std::size_t movement,
                                                               double distance_to_center,
                                                               std::size_t conflict,
                                                               double vehicle_length) const {
  const double arc = movements_.at(movement).approach_length() - distance_to_center;
  return frame_at_arc(movement, arc, conflict, vehicle_length);
}

double IntersectionModel::exit_arc(std::size_t movement, double vehicle_length) const {
  const auto& ks = by_movement_.at(movement);
  if (ks.empty()) return movements_.at(movement).approach_length() + l_safe(vehicle_length);
  double last = 0.0;
  for (std::size_t k : ks) last = std::max(last, conflicts_.points[k].s_of(movement));
  return last + l_safe(vehicle_length);
}

MovementPath make_movement(const GeometryConfig& config, Leg origin, Turn turn) {
  const double w = config.lane_width;
  const double a = config.approach_length;
  const double x_exit = config.exit_length;
  const double lanes = config.include_right_turns ? 3.0 : 2.0;
  const double box = lanes * w;
  if (!(w > 0.0) || !(a > box) || !(x_exit > box)) {
    throw GeometryError("lane_width, approach_length and exit_length must be positive and "
                        "the legs must extend past the junction box");
  }
  if (turn == Turn::right && !config.include_right_turns) {
    throw GeometryError("right turns require include_right_turns");
  }

  std::vector<PathSegment> base;
  switch (turn) {
    case Turn::straight: {
      const double y = 1.5 * w;
      base.push_back(LineSegment{{a, y}, {-x_exit, y}});
      break;
    }
    case Turn::left: {
      const double y = 0.5 * w;
      const double r = config.left_turn_radius > 0.0 ? config.left_turn_radius : box + 0.5 * w;
      const double x0 = r - 0.5 * w;
      const double y_end = y - r;
      if (!(x0 > 0.0) || !(x0 < a) || !(y_end > -x_exit)) {
        throw GeometryError("left_turn_radius does not fit the approach and exit legs");
      }
      base.push_back(LineSegment{{a, y}, {x0, y}});
      base.push_back(ArcSegment{{x0, y - r}, r, 0.5 * kPi, 0.5 * kPi});
      base.push_back(LineSegment{{-0.5 * w, y_end}, {-0.5 * w, -x_exit}});
      break;
    }
    case Turn::right: {
      const double y = 2.5 * w;
      const double r = std::max(0.5 * w, box - y);
      const double x0 = y + r;
      base.push_back(LineSegment{{a, y}, {x0, y}});
      base.push_back(ArcSegment{{x0, y + r}, r, -0.5 * kPi, -0.5 * kPi});
      base.push_back(LineSegment{{x0 - r, y + r}, {x0 - r, x_exit}});
      break;
    }
  }

  const int quarters = static_cast<int>(origin);
  std::vector<PathSegment> segs;
  segs.reserve(base.size());
  for (const auto& s : base) segs.push_back(rotate_segment(s, quarters));
  const Leg dest = destination_of(origin, turn);
  std::string id{leg_letter(origin), leg_letter(dest)};
  return MovementPath(std::move(id), origin, dest, std::move(segs), a);
}

IntersectionModel build_intersection(const GeometryConfig& config) {
  std::vector<std::string> ids = config.movements;
  if (ids.empty()) ids = {"ES", "EW", "NE", "NS", "WN", "WE", "SW", "SN"};
  std::vector<MovementPath> movements;
  for (const auto& id : ids) {
    if (id.size() != 2) throw GeometryError("movement id must be two leg letters: " + id);
    const Leg origin = leg_from_letter(id[0]);
    const Leg dest = leg_from_letter(id[1]);
    const int delta = (static_cast<int>(dest) - static_cast<int>(origin) + 4) % 4;
    if (delta == 0) throw GeometryError("movement " + id + " is a U-turn");
    if (delta == 1) {
      throw GeometryError("right turn " + id + " is exempt from coordination");
    }
    movements.push_back(make_movement(config, origin, delta == 2 ? Turn::straight : Turn::left));
  }
  std::vector<MovementPath> exempt;
  if (config.include_right_turns) {
    for (Leg leg : {Leg::east, Leg::north, Leg::west, Leg::south}) {
      exempt.push_back(make_movement(config, leg, Turn::right));
    }
  }
  const double half_width = config.half_width > 0.0 ? config.half_width : 0.5 * config.lane_width;
  return IntersectionModel(std::move(movements), std::move(exempt), half_width,
                           config.enter_margin, config.safe_margin);
}

}  // namespace intercoord
