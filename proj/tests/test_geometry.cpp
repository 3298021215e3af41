#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "intercoord/geometry.hpp"

using namespace intercoord;

namespace {

struct Hit {
  std::size_t i;
  std::size_t j;
  double s_i;
  double s_j;
};

// Dense polyline resampling of a path; independent of the analytic solver.
std::vector<Point2> sample(const MovementPath& p, double step) {
  std::vector<Point2> pts;
  const auto n = static_cast<std::size_t>(std::ceil(p.total_length() / step));
  pts.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    pts.push_back(p.point_at(std::min(p.total_length(), static_cast<double>(k) * step)));
  }
  return pts;
}

bool seg_cross(Point2 a, Point2 b, Point2 c, Point2 d, double& ta, double& tc) {
  const double rx = b.x - a.x, ry = b.y - a.y;
  const double sx = d.x - c.x, sy = d.y - c.y;
  const double den = rx * sy - ry * sx;
  if (std::abs(den) < 1e-15) return false;
  const double qx = c.x - a.x, qy = c.y - a.y;
  ta = (qx * sy - qy * sx) / den;
  tc = (qx * ry - qy * rx) / den;
  return ta >= 0.0 && ta < 1.0 && tc >= 0.0 && tc < 1.0;
}

// Brute-force pairwise polyline intersection with grid bucketing.
std::vector<Hit> polyline_oracle(const std::vector<MovementPath>& paths, double step) {
  constexpr double kCell = 2.0;
  std::vector<std::vector<Point2>> polys;
  for (const auto& p : paths) polys.push_back(sample(p, step));
  auto key = [&](Point2 p) {
    return std::make_pair(static_cast<long>(std::floor(p.x / kCell)),
                          static_cast<long>(std::floor(p.y / kCell)));
  };
  std::vector<Hit> hits;
  for (std::size_t i = 0; i < polys.size(); ++i) {
    std::map<std::pair<long, long>, std::vector<std::size_t>> grid;
    for (std::size_t k = 0; k + 1 < polys[i].size(); ++k) {
      grid[key(polys[i][k])].push_back(k);
    }
    for (std::size_t j = i + 1; j < polys.size(); ++j) {
      std::vector<Hit> pair_hits;
      for (std::size_t m = 0; m + 1 < polys[j].size(); ++m) {
        const auto [cx, cy] = key(polys[j][m]);
        for (long dx = -1; dx <= 1; ++dx) {
          for (long dy = -1; dy <= 1; ++dy) {
            auto it = grid.find({cx + dx, cy + dy});
            if (it == grid.end()) continue;
            for (std::size_t k : it->second) {
              double ta = 0.0, tc = 0.0;
              if (seg_cross(polys[i][k], polys[i][k + 1], polys[j][m], polys[j][m + 1], ta, tc)) {
                pair_hits.push_back({i, j, (static_cast<double>(k) + ta) * step,
                                     (static_cast<double>(m) + tc) * step});
              }
            }
          }
        }
      }
      // Collapse duplicates produced at shared sample vertices.
      std::vector<Hit> unique;
      for (const auto& h : pair_hits) {
        bool dup = false;
        for (const auto& u : unique) dup = dup || std::abs(u.s_i - h.s_i) < 0.05;
        if (!dup) unique.push_back(h);
      }
      hits.insert(hits.end(), unique.begin(), unique.end());
    }
  }
  return hits;
}

void expect_matches_oracle(const IntersectionModel& m) {
  const auto hits = polyline_oracle(m.movements(), 0.01);
  ASSERT_EQ(hits.size(), m.conflicts().size());
  for (const auto& h : hits) {
    const auto k = m.conflict_between(h.i, h.j);
    ASSERT_TRUE(k.has_value()) << m.movement(h.i).id() << "/" << m.movement(h.j).id();
    const auto& cp = m.conflicts()[*k];
    EXPECT_NEAR(cp.s_of(h.i), h.s_i, 0.01);
    EXPECT_NEAR(cp.s_of(h.j), h.s_j, 0.01);
  }
}

}  // namespace

TEST(Geometry, DefaultModelHasEightMovements) {
  const auto m = build_intersection({});
  EXPECT_EQ(m.size(), 8u);
  EXPECT_EQ(m.movement(0).id(), "ES");
  EXPECT_EQ(m.movement(7).id(), "SN");
}

TEST(Geometry, DefaultConflictCountMatchesPolylineOracle) {
  const auto m = build_intersection({});
  EXPECT_EQ(m.conflicts().size(), 16u);
  expect_matches_oracle(m);
}

TEST(Geometry, ConflictMatrixSymmetricAndConsistent) {
  const auto m = build_intersection({});
  const auto& c = m.conflict_matrix();
  int ones = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(c[i][i], 0);
    for (std::size_t j = 0; j < m.size(); ++j) {
      EXPECT_EQ(c[i][j], c[j][i]);
      ones += c[i][j];
      EXPECT_EQ(c[i][j] == 1, m.conflict_between(i, j).has_value());
    }
  }
  EXPECT_EQ(ones, 2 * static_cast<int>(m.conflicts().size()));
}

TEST(Geometry, SingleMovementHasNoConflicts) {
  GeometryConfig cfg;
  cfg.movements = {"EW"};
  const auto m = build_intersection(cfg);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m.conflict_matrix()[0][0], 0);
  EXPECT_TRUE(m.conflicts().empty());
}

TEST(Geometry, PerpendicularStraightsCrossOnce) {
  GeometryConfig cfg;
  cfg.movements = {"EW", "NS"};
  const auto m = build_intersection(cfg);
  ASSERT_EQ(m.conflicts().size(), 1u);
  EXPECT_EQ(m.conflict_matrix()[0][1], 1);
  const auto& cp = m.conflicts()[0];
  // EW runs along y = 1.5w westbound; NS runs along x = -1.5w southbound.
  EXPECT_NEAR(cp.location.x, -5.25, 1e-12);
  EXPECT_NEAR(cp.location.y, 5.25, 1e-12);
  EXPECT_NEAR(cp.s_of(0), 200.0 + 5.25, 1e-12);
  EXPECT_NEAR(cp.s_of(1), 200.0 - 5.25, 1e-12);
}

TEST(Geometry, OpposingStraightsDoNotConflict) {
  GeometryConfig cfg;
  cfg.movements = {"EW", "WE"};
  const auto m = build_intersection(cfg);
  EXPECT_TRUE(m.conflicts().empty());
}

TEST(Geometry, RightTurnsAreExempt) {
  GeometryConfig cfg;
  cfg.include_right_turns = true;
  const auto m = build_intersection(cfg);
  EXPECT_EQ(m.size(), 8u);
  EXPECT_EQ(m.exempt_movements().size(), 4u);
  EXPECT_EQ(m.exempt_movements()[0].id(), "EN");
  EXPECT_TRUE(m.exempt_movements()[0].right_turn());
  expect_matches_oracle(m);

  cfg.movements = {"EN"};
  EXPECT_THROW(build_intersection(cfg), GeometryError);
}

TEST(Geometry, RejectsUTurnsAndBadIds) {
  GeometryConfig cfg;
  cfg.movements = {"EE"};
  EXPECT_THROW(build_intersection(cfg), GeometryError);
  cfg.movements = {"EX"};
  EXPECT_THROW(build_intersection(cfg), GeometryError);
  cfg.movements = {"EW", "EW"};
  EXPECT_THROW(build_intersection(cfg), GeometryError);
}

TEST(Geometry, RejectsOverlappingCenterlines) {
  const LineSegment a{{0, 0}, {10, 0}};
  const LineSegment b{{5, 0}, {15, 0}};
  std::vector<MovementPath> paths{MovementPath("EW", Leg::east, Leg::west, {a}, 5.0),
                                  MovementPath("NS", Leg::north, Leg::south, {b}, 5.0)};
  EXPECT_THROW(compute_conflicts(paths, 1.0), GeometryError);
}

TEST(Geometry, RejectsDoubleCrossing) {
  // A line cutting through the middle of a half circle crosses it twice.
  const ArcSegment arc{{0, 0}, 10.0, 0.0, std::acos(-1.0)};
  const LineSegment line{{-20, 5}, {20, 5}};
  std::vector<MovementPath> paths{MovementPath("EN", Leg::east, Leg::north, {arc}, 5.0),
                                  MovementPath("WE", Leg::west, Leg::east, {line}, 20.0)};
  EXPECT_THROW(compute_conflicts(paths, 1.0), GeometryError);
}

TEST(Geometry, ParallelPathsDoNotConflict) {
  const LineSegment a{{0, 0}, {10, 0}};
  const LineSegment b{{0, 3}, {10, 3}};
  std::vector<MovementPath> paths{MovementPath("EW", Leg::east, Leg::west, {a}, 5.0),
                                  MovementPath("WE", Leg::west, Leg::east, {b}, 5.0)};
  const auto set = compute_conflicts(paths, 1.0);
  EXPECT_TRUE(set.points.empty());
  EXPECT_EQ(set.matrix[0][1], 0);
}

TEST(Geometry, ConflictFrameIdentityPlacement) {
  GeometryConfig cfg;
  cfg.movements = {"EW", "NS"};
  cfg.safe_margin = 0.0;
  const auto m = build_intersection(cfg);
  const auto& cp = m.conflicts()[0];
  const auto f = m.frame_at_arc(0, cp.s_of(0), 0, 0.0);
  ASSERT_TRUE(f);
  EXPECT_DOUBLE_EQ(f->l_prime, 0.0);
  EXPECT_DOUBLE_EQ(f->l_enter, m.half_width());
  EXPECT_DOUBLE_EQ(f->l_safe, m.half_width());
}

TEST(Geometry, ConflictFrameCollinearDistancesAdd) {
  // A straight path crossing exactly at the center.
  const LineSegment a{{200, 0}, {-60, 0}};
  const LineSegment b{{0, 200}, {0, -60}};
  IntersectionModel m({MovementPath("EW", Leg::east, Leg::west, {a}, 200.0),
                       MovementPath("NS", Leg::north, Leg::south, {b}, 200.0)},
                      {}, 1.75, 0.0, 1.0);
  const auto f = m.conflict_frame(0, 200.0, 0, 4.5);
  ASSERT_TRUE(f);
  EXPECT_NEAR(f->l_prime, 200.0, 1e-12);
  EXPECT_DOUBLE_EQ(f->l_enter, 4.0);
  EXPECT_DOUBLE_EQ(f->l_safe, 5.0);
  // Monotone: the frame moves one for one with the distance.
  for (double d : {150.0, 100.0, 37.5}) {
    EXPECT_NEAR(m.conflict_frame(0, d, 0, 4.5)->l_prime, d, 1e-12);
  }
  EXPECT_FALSE(m.conflict_frame(0, -0.5, 0, 4.5).has_value());
}

TEST(Geometry, LeftTurnFrameMatchesArcLengthQuadrature) {
  const auto m = build_intersection({});
  const std::size_t es = *m.index_of("ES");
  const auto& path = m.movement(es);
  for (std::size_t k : m.conflicts_of(es)) {
    const double s_cp = m.conflicts()[k].s_of(es);
    const double start = 150.0;
    // Sum chord lengths of a fine sampling of the rendered centerline.
    const int n = 200000;
    double len = 0.0;
    Point2 prev = path.point_at(start);
    for (int q = 1; q <= n; ++q) {
      const Point2 p = path.point_at(start + (s_cp - start) * q / n);
      len += std::hypot(p.x - prev.x, p.y - prev.y);
      prev = p;
    }
    const auto f = m.frame_at_arc(es, start, k, 4.5);
    ASSERT_TRUE(f);
    EXPECT_NEAR(f->l_prime, len, 1e-6);
  }
}

TEST(Geometry, ExitArcClearsLastConflict) {
  const auto m = build_intersection({});
  for (std::size_t i = 0; i < m.size(); ++i) {
    double last = 0.0;
    for (std::size_t k : m.conflicts_of(i)) last = std::max(last, m.conflicts()[k].s_of(i));
    EXPECT_DOUBLE_EQ(m.exit_arc(i, 4.5), last + m.l_safe(4.5));
    EXPECT_LT(m.exit_arc(i, 4.5), m.movement(i).total_length());
  }
}

TEST(Geometry, RandomGeometriesAgreeWithOracle) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> lane(3.0, 4.5);
  std::uniform_real_distribution<double> radius_extra(0.0, 6.0);
  const std::vector<std::string> all{"ES", "EW", "NE", "NS", "WN", "WE", "SW", "SN"};
  for (int trial = 0; trial < 6; ++trial) {
    GeometryConfig cfg;
    cfg.lane_width = lane(rng);
    cfg.approach_length = 60.0;
    cfg.exit_length = 40.0;
    cfg.left_turn_radius = 2.5 * cfg.lane_width + radius_extra(rng);
    cfg.include_right_turns = trial % 2 == 1;
    for (const auto& id : all) {
      if (rng() % 3 != 0) cfg.movements.push_back(id);
    }
    if (cfg.movements.empty()) cfg.movements.push_back("EW");
    const auto m = build_intersection(cfg);
    expect_matches_oracle(m);
  }
}
