#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "test_support.hpp"
#include "tomap/detector_sim.hpp"
#include "tomap/error.hpp"
#include "tomap/points_filter.hpp"

namespace tomap {
namespace {

const CameraIntrinsics kCam;

PointTarget make_target(int id, std::vector<WorldPoint> pts, const Pose& keyframe) {
  PointTarget t;
  t.target_id = id;
  t.points = std::move(pts);
  t.last_keyframe = keyframe;
  t.summary = GaussianSummary::from_points(t.points);
  t.entropy = differential_entropy(t.summary);
  return t;
}

// Points placed so they project onto the given pixels at the given depth.
std::vector<WorldPoint> points_at_pixels(const std::vector<PixelPoint>& px, double depth, const Pose& world_from_cam) {
  std::vector<WorldPoint> out;
  for (const PixelPoint& p : px) out.push_back(back_project_at_depth(p, depth, world_from_cam, kCam));
  return out;
}

std::vector<PixelPoint> pixels_in(const BBox& b, int n, Rng& rng) {
  std::vector<PixelPoint> out;
  for (int i = 0; i < n; ++i) out.push_back({rng.uniform(b.u_min + 0.5, b.u_max - 0.5), rng.uniform(b.v_min + 0.5, b.v_max - 0.5)});
  return out;
}

// Camera orbiting `center` at the given horizontal radius and height, looking at it.
Pose orbit_pose(const Eigen::Vector3d& center, double radius, double height, double angle) {
  const Eigen::Vector3d eye = center + Eigen::Vector3d(radius * std::cos(angle), radius * std::sin(angle), height);
  return test::look_at(eye, center);
}

TEST(FilterConfig, Validation) {
  FilterConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.association_gate(), 100);
  c.w1 = 0.7;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.kld_threshold = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.n_pts = 42;
  EXPECT_EQ(c.association_gate(), 42);
}

TEST(Generate, VertexCaseLiesOnCornerRay) {
  const Pose world_from_cam = camera_pose_from_body({3, -2, 30}, 0.7, 1.0);
  const BBox box{100, 120, 200, 180};
  Eigen::Matrix<double, 4, Eigen::Dynamic> a(4, 1);
  a << 1, 0, 0, 0;
  Eigen::RowVectorXd delta(1);
  delta << 50.0;
  const auto pts = generate_points_from(a, delta, box.corners(), world_from_cam, kCam);
  ASSERT_EQ(pts.size(), 1u);
  const WorldPoint expected = world_from_cam.apply(50.0 * kCam.normalized(box.corners()[0]));
  EXPECT_LT((pts[0] - expected).norm(), 1e-12);
  const Eigen::Vector3d o = test::oracle_project(pts[0], world_from_cam, kCam);
  EXPECT_NEAR(o.x(), 100, 1e-9);
  EXPECT_NEAR(o.y(), 120, 1e-9);
  EXPECT_NEAR(o.z(), 50.0, 1e-9);
}

TEST(Generate, ColumnsAreNormalizedByTheirL1Norm) {
  const Pose world_from_cam;
  const BBox box{100, 100, 300, 200};
  Eigen::Matrix<double, 4, Eigen::Dynamic> a(4, 1);
  a << 2, 2, 2, 2;
  Eigen::RowVectorXd delta(1);
  delta << 10.0;
  const auto pts = generate_points_from(a, delta, box.corners(), world_from_cam, kCam);
  const Eigen::Vector3d o = test::oracle_project(pts[0], world_from_cam, kCam);
  EXPECT_NEAR(o.x(), 200, 1e-9);
  EXPECT_NEAR(o.y(), 150, 1e-9);
  EXPECT_NEAR(o.z(), 10, 1e-12);
}

TEST(Generate, EveryPointProjectsInsideBoxWithBoundedDepth) {
  Rng rng(51);
  const double d_m = 50.0;
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Pose world_from_cam(test::random_rotation(rng), test::random_vector(rng, -40, 40));
    const BBox box = test::random_box(rng, kCam).enlarged(0.15, kCam);
    const auto pts = generate_points(box, world_from_cam, kCam, 1000, d_m, rng);
    ASSERT_EQ(pts.size(), 1000u);
    for (const WorldPoint& p : pts) {
      const Eigen::Vector3d o = test::oracle_project(p, world_from_cam, kCam);
      const bool inside = o.x() >= box.u_min - 1e-6 && o.x() <= box.u_max + 1e-6 && o.y() >= box.v_min - 1e-6 &&
                          o.y() <= box.v_max + 1e-6;
      // K^-1 l has unit z for every corner, so the max corner scale is 1.
      const bool depth_ok = o.z() > 0.0 && o.z() <= d_m * (1.0 + 1e-12);
      if (!inside || !depth_ok) ++violations;
    }
  }
  EXPECT_EQ(violations, 0);
}

TEST(Generate, ProjectedPointsSpanTheBox) {
  // Oracle for the edge-band occupancy: the fraction of the box width covered
  // by (a2 + a3) / sum(a) with a_i ~ U(0,1], estimated independently.
  Rng oracle_rng(52);
  const int draws = 1000000;
  int band_hits = 0;
  for (int i = 0; i < draws; ++i) {
    double a[4];
    for (double& x : a) x = 1.0 - oracle_rng.uniform();
    band_hits += (a[1] + a[2]) / (a[0] + a[1] + a[2] + a[3]) < 0.10;
  }
  const double p_band = static_cast<double>(band_hits) / draws;

  Rng rng(53);
  const Pose world_from_cam = camera_pose_from_body({0, 0, 30}, 0.0, 1.0);
  const BBox box{200, 150, 320, 230};
  const int m = 1000;
  const auto pts = generate_points(box, world_from_cam, kCam, m, 50.0, rng);
  double umin = INFINITY, umax = -INFINITY, vmin = INFINITY, vmax = -INFINITY;
  int left_band = 0;
  for (const WorldPoint& p : pts) {
    const Eigen::Vector3d o = test::oracle_project(p, world_from_cam, kCam);
    umin = std::min(umin, o.x());
    umax = std::max(umax, o.x());
    vmin = std::min(vmin, o.y());
    vmax = std::max(vmax, o.y());
    left_band += o.x() < box.u_min + 0.10 * box.width();
  }
  // Under the weight law each side is approached within 15% with probability > 1 - 1e-7.
  EXPECT_LT(umin - box.u_min, 0.15 * box.width());
  EXPECT_LT(box.u_max - umax, 0.15 * box.width());
  EXPECT_LT(vmin - box.v_min, 0.15 * box.height());
  EXPECT_LT(box.v_max - vmax, 0.15 * box.height());
  EXPECT_NEAR(left_band, m * p_band, 4.0 * std::sqrt(m * p_band * (1 - p_band)));
}

TEST(Generate, DegenerateBoxThrows) {
  Rng rng(54);
  try {
    generate_points(BBox{10, 10, 10, 50}, Pose{}, kCam, 10, 50, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateBox);
  }
}

TEST(Weight, PureUniform) {
  FilterConfig cfg;
  cfg.w1 = 0.0;
  cfg.w2 = 1.0;
  const BBox box{10, 20, 50, 40};
  EXPECT_DOUBLE_EQ(weight({30, 30}, box, cfg), 1.0 / 800.0);
  EXPECT_DOUBLE_EQ(weight({10, 20}, box, cfg), 1.0 / 800.0);
  EXPECT_DOUBLE_EQ(weight({9.99, 30}, box, cfg), 0.0);
}

TEST(Weight, GaussianPeak) {
  FilterConfig cfg;
  cfg.w1 = 1.0;
  cfg.w2 = 0.0;
  const BBox box{10, 20, 50, 40};
  EXPECT_NEAR(weight({30, 30}, box, cfg), 1.0 / (2 * std::numbers::pi * 20 * 10), 1e-15);
}

TEST(Weight, MixtureIntegratesToOne) {
  FilterConfig cfg;
  const BBox box{100, 100, 140, 120};
  // Midpoint rule over +-10 sigma; cells straddling the box border are
  // subdivided so the uniform part is integrated exactly.
  const double h = 0.25;
  double sum = 0.0;
  for (double u = 100 - 200 + h / 2; u < 140 + 200; u += h) {
    for (double v = 100 - 100 + h / 2; v < 120 + 100; v += h) sum += weight({u, v}, box, cfg) * h * h;
  }
  EXPECT_NEAR(sum, 1.0, 1e-3);
}

class UpdateFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    cam = camera_pose_from_body({0, -30, 30}, std::numbers::pi / 2, std::numbers::pi / 4);
    frame.emplace(cam, kCam);
    Rng rng(55);
    target = make_target(1, generate_points(box.enlarged(0.15, kCam), cam, kCam, cfg.m, cfg.d_m, rng), cam);
  }
  FilterConfig cfg;
  Pose cam;
  std::optional<CameraFrame> frame;
  BBox box{300, 220, 340, 260};
  PointTarget target;
};

TEST_F(UpdateFixture, ConservesCountAndResamplesFromPredecessors) {
  cfg.sigma_update = 0.0;
  cfg.w1 = 0.0;
  cfg.w2 = 1.0;
  const std::vector<WorldPoint> before = target.points;
  Rng rng(56);
  update_points(target, box, *frame, cfg, rng);
  ASSERT_EQ(target.points.size(), before.size());
  for (const WorldPoint& p : target.points) {
    ASSERT_TRUE(std::find(before.begin(), before.end(), p) != before.end());
    const Eigen::Vector3d o = test::oracle_project(p, cam, kCam);
    EXPECT_TRUE(box.contains({o.x(), o.y()}));
  }
}

TEST_F(UpdateFixture, UpdatesSummaryStreakAndKeyframe) {
  Rng rng(57);
  const Pose moved = camera_pose_from_body({5, -30, 30}, std::numbers::pi / 2, std::numbers::pi / 4);
  const CameraFrame f2(moved, kCam);
  const UpdateResult r = update_points(target, box, f2, cfg, rng);
  EXPECT_EQ(target.points.size(), static_cast<std::size_t>(cfg.m));
  EXPECT_EQ(target.update_count, 1);
  EXPECT_EQ(target.last_keyframe.translation(), moved.translation());
  EXPECT_GE(r.kld, 0.0);
  EXPECT_EQ(target.last_kld, r.kld);
  EXPECT_EQ(target.kld_streak, r.kld < cfg.kld_threshold ? 1 : 0);
  const GaussianSummary s = GaussianSummary::from_points(target.points);
  EXPECT_LT((s.mean - target.summary.mean).norm(), 1e-12);
  EXPECT_DOUBLE_EQ(target.entropy, differential_entropy(target.summary));
}

TEST_F(UpdateFixture, AllZeroWeightsLeavesTargetUnchanged) {
  // Look the other way: nothing projects into the image.
  const CameraFrame away(camera_pose_from_body({0, -30, 30}, -std::numbers::pi / 2, 0.0), kCam);
  const std::vector<WorldPoint> before = target.points;
  Rng rng(58);
  try {
    update_points(target, box, away, cfg, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AllZeroWeights);
  }
  EXPECT_EQ(target.points, before);
  EXPECT_EQ(target.update_count, 0);
}

TEST(Update, CentroidConvergesFromCircleOfViews) {
  const TargetModel rock = TargetModel::ellipsoid(1, {10, 20, 1}, {1, 1, 1});
  FilterConfig cfg;
  Rng rng(59);
  const Pose first = orbit_pose(rock.center, 29, 29, 0.0);
  const BBox first_box = *projected_bbox(rock, CameraFrame(first, kCam));
  PointTarget t = make_target(1, generate_points(first_box.enlarged(cfg.enlarge_frac, kCam), first, kCam, cfg.m,
                                                 cfg.d_m, rng), first);
  const double initial_error = (t.summary.mean - rock.center).norm();
  for (int i = 1; i <= 72; ++i) {
    const Pose view = orbit_pose(rock.center, 29, 29, i * std::numbers::pi / 36);
    const CameraFrame f(view, kCam);
    update_points(t, *projected_bbox(rock, f), f, cfg, rng);
  }
  EXPECT_GT(initial_error, 5.0);
  EXPECT_LT((t.summary.mean - rock.center).norm(), 0.5);
}

TEST(Associate, SingleBoxCollectsAllPoints) {
  Rng rng(60);
  const Pose cam = camera_pose_from_body({0, 0, 30}, 0.0, 1.0);
  const BBox box{200, 200, 260, 250};
  std::vector<PointTarget> targets{make_target(1, points_at_pixels(pixels_in(box, 1000, rng), 20, cam), cam)};
  const auto r = associate(std::span(&box, 1), targets, CameraFrame(cam, kCam), FilterConfig{});
  ASSERT_EQ(r.matches.size(), 1u);
  EXPECT_EQ(r.matches[0].count, 1000);
  EXPECT_TRUE(r.unmatched_boxes.empty());
}

TEST(Associate, SparseOverlapIsRejected) {
  Rng rng(61);
  const Pose cam = camera_pose_from_body({0, 0, 30}, 0.0, 1.0);
  const BBox box{200, 200, 260, 250};
  const BBox elsewhere{400, 300, 460, 350};
  auto px = pixels_in(box, 50, rng);
  const auto rest = pixels_in(elsewhere, 950, rng);
  px.insert(px.end(), rest.begin(), rest.end());
  std::vector<PointTarget> targets{make_target(1, points_at_pixels(px, 20, cam), cam)};
  const auto r = associate(std::span(&box, 1), targets, CameraFrame(cam, kCam), FilterConfig{});
  EXPECT_TRUE(r.matches.empty());
  EXPECT_EQ(r.unmatched_boxes, std::vector<std::size_t>{0});
}

TEST(Associate, CrossedCountsMatchPermutationOracle) {
  Rng rng(62);
  const Pose cam = camera_pose_from_body({0, 0, 30}, 0.0, 1.0);
  const std::vector<BBox> boxes{{100, 100, 160, 150}, {400, 300, 460, 350}};
  const BBox spare{250, 50, 300, 80};
  auto build = [&](int in0, int in1) {
    auto px = pixels_in(boxes[0], in0, rng);
    auto b1 = pixels_in(boxes[1], in1, rng);
    auto sp = pixels_in(spare, 1000 - in0 - in1, rng);
    px.insert(px.end(), b1.begin(), b1.end());
    px.insert(px.end(), sp.begin(), sp.end());
    return points_at_pixels(px, 25, cam);
  };
  std::vector<PointTarget> targets{make_target(1, build(900, 50), cam), make_target(2, build(40, 880), cam)};
  const auto r = associate(boxes, targets, CameraFrame(cam, kCam), FilterConfig{});
  const int diag = 900 + 880, anti = 50 + 40;
  ASSERT_GT(diag, anti);
  ASSERT_EQ(r.matches.size(), 2u);
  int total = 0;
  for (const BoxMatch& m : r.matches) {
    EXPECT_EQ(m.box_index, m.target_index);
    total += m.count;
  }
  EXPECT_EQ(total, diag);
}

TEST(Associate, EdgeBoxesAreDropped) {
  const Pose cam = camera_pose_from_body({0, 0, 30}, 0.0, 1.0);
  const std::vector<BBox> boxes{{0.5, 100, 40, 140}, {600, 100, 640, 140}, {100, 100, 140, 140}};
  const auto r = associate(boxes, {}, CameraFrame(cam, kCam), FilterConfig{});
  EXPECT_EQ(r.dropped_boxes, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(r.unmatched_boxes, std::vector<std::size_t>{2});
}

TEST(AlreadyMapped, Examples) {
  EXPECT_FALSE(check_already_mapped({0, 0, 0}, {}, 2.0));
  const std::vector<WorldPoint> mapped{{10, 0, 0}};
  EXPECT_TRUE(check_already_mapped({10.1, 0, 0}, mapped, 2.0));
  EXPECT_FALSE(check_already_mapped({12, 0, 0}, mapped, 2.0));
  EXPECT_FALSE(check_already_mapped({5, 0, 0}, mapped, 2.0));
}

// Closed-loop helper: one rock, camera orbiting it, perfect boxes.
struct OrbitRun {
  TargetModel rock = TargetModel::ellipsoid(1, {0, 0, 1.5}, {1.5, 1.2, 1.5});
  std::vector<FilterEvent> events;
};

TEST(Tick, NominalSequenceIsSpawnedConvergingConverged) {
  OrbitRun run;
  FilterConfig cfg;
  PointsFilter filter(cfg, kCam);
  Rng rng(63);
  const double radius = 28.5, height = 28.5;
  // Approach along a straight line, then orbit, at 1 m per frame step.
  for (int f = 0; f < 2000; ++f) {
    const double angle = f * (1.0 / radius);
    const Pose view = orbit_pose(run.rock.center, radius, height, angle);
    const CameraFrame frame(view, kCam);
    std::vector<BBox> boxes;
    if (auto b = projected_bbox(run.rock, frame)) boxes.push_back(*b);
    const TickResult r = filter.tick(boxes, view, rng);
    run.events.insert(run.events.end(), r.events.begin(), r.events.end());
    if (!filter.targets().empty() && filter.targets()[0].state == TargetState::Converged) break;
  }
  ASSERT_EQ(run.events.size(), 3u);
  EXPECT_EQ(run.events[0].kind, FilterEventKind::Spawned);
  EXPECT_EQ(run.events[0].box_index, 0u);
  EXPECT_EQ(run.events[1].kind, FilterEventKind::Converging);
  EXPECT_EQ(run.events[2].kind, FilterEventKind::Converged);
  const PointTarget& t = filter.targets()[0];
  EXPECT_LT((t.summary.mean - run.rock.center).norm(), run.rock.bounding_radius());
}

TEST(Tick, FalsePositiveTargetExpires) {
  // A transient source seen for three frames: spawn plus two keyframe updates.
  FilterConfig cfg;
  cfg.t_pts_missing = 20;
  PointsFilter filter(cfg, kCam);
  Rng rng(64);
  const TargetModel ghost = TargetModel::ellipsoid(9, {0, 0, 1}, {1, 1, 1});
  std::vector<FilterEvent> events;
  for (int f = 0; f < 3; ++f) {
    const Pose view = orbit_pose(ghost.center, 28, 28, f * 2.0 / 28);
    const BBox box = *projected_bbox(ghost, CameraFrame(view, kCam));
    const auto r = filter.tick(std::span(&box, 1), view, rng);
    events.insert(events.end(), r.events.begin(), r.events.end());
  }
  ASSERT_EQ(filter.targets().size(), 1u);
  EXPECT_EQ(filter.targets()[0].update_count, 2);
  int ticks = 0;
  while (!filter.targets().empty()) {
    const auto r = filter.tick({}, orbit_pose(ghost.center, 28, 28, 0.3), rng);
    events.insert(events.end(), r.events.begin(), r.events.end());
    ++ticks;
    ASSERT_LE(ticks, cfg.t_pts_missing);
  }
  EXPECT_EQ(ticks, cfg.t_pts_missing);
  for (const FilterEvent& e : events) {
    EXPECT_NE(e.kind, FilterEventKind::Converging);
    EXPECT_NE(e.kind, FilterEventKind::Converged);
  }
  EXPECT_EQ(events.back().kind, FilterEventKind::Deregistered);
}

TEST(Tick, MappedTargetConsumesBoxWithoutUpdate) {
  FilterConfig cfg;
  PointsFilter filter(cfg, kCam);
  Rng rng(65);
  const BBox box{300, 200, 340, 240};
  const Pose v0 = camera_pose_from_body({0, 0, 30}, 0.0, 1.0);
  filter.tick(std::span(&box, 1), v0, rng);
  ASSERT_EQ(filter.targets().size(), 1u);
  const int id = filter.targets()[0].target_id;
  filter.mark_mapped(id, {{1, 2, 3}});
  const auto points_before = filter.targets()[0].points;

  const auto r = filter.tick(std::span(&box, 1), camera_pose_from_body({0.0, 0.0, 30}, 0.0, 1.0), rng);
  EXPECT_TRUE(r.events.empty());
  EXPECT_TRUE(r.associated.empty());
  ASSERT_EQ(r.assignments.size(), 1u);
  EXPECT_EQ(r.assignments[0].second, id);
  EXPECT_EQ(filter.targets()[0].state, TargetState::Mapped);
  EXPECT_EQ(filter.targets()[0].points, points_before);
  EXPECT_FALSE(filter.deregister(id));

  for (int i = 0; i < cfg.t_pts_missing + 5; ++i) filter.tick({}, v0, rng);
  EXPECT_EQ(filter.targets().size(), 1u);
}

TEST(Tick, ConvergedTargetsAreExemptFromExpiry) {
  FilterConfig cfg;
  cfg.t_pts_missing = 5;
  PointsFilter filter(cfg, kCam);
  Rng rng(66);
  const BBox box{300, 200, 340, 240};
  filter.tick(std::span(&box, 1), camera_pose_from_body({0, 0, 30}, 0.0, 1.0), rng);
  filter.find(filter.targets()[0].target_id)->state = TargetState::Converged;
  for (int i = 0; i < 20; ++i) filter.tick({}, Pose{}, rng);
  EXPECT_EQ(filter.targets().size(), 1u);
}

TEST(Tick, TargetWithFewKeyframesNeverConverges) {
  // Even with gates everything passes, a target needs n_kld keyframe
  // updates while converging before it can be declared converged.
  FilterConfig cfg;
  cfg.h_c = 100.0;
  cfg.kld_threshold = 1e6;
  cfg.n_kld = 10;
  PointsFilter filter(cfg, kCam);
  Rng rng(67);
  const TargetModel rock = TargetModel::ellipsoid(1, {0, 0, 1}, {1, 1, 1});
  auto step = [&](int f) {
    const Pose view = orbit_pose(rock.center, 28, 28, f * 2.0 / 28);
    const BBox box = *projected_bbox(rock, CameraFrame(view, kCam));
    return filter.tick(std::span(&box, 1), view, rng);
  };
  std::vector<FilterEvent> events;
  // Spawn, one update that starts converging, then n_kld - 1 more keyframes.
  for (int f = 0; f < cfg.n_kld + 1; ++f) {
    const auto r = step(f);
    events.insert(events.end(), r.events.begin(), r.events.end());
  }
  for (const FilterEvent& e : events) EXPECT_NE(e.kind, FilterEventKind::Converged);
  ASSERT_EQ(filter.targets().size(), 1u);
  EXPECT_EQ(filter.targets()[0].state, TargetState::Converging);
  EXPECT_EQ(filter.targets()[0].kld_streak, cfg.n_kld - 1);

  const auto r = step(cfg.n_kld + 1);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0].kind, FilterEventKind::Converged);
}

TEST(Tick, NonKeyframeAssociationKeepsTargetAlive) {
  FilterConfig cfg;
  cfg.t_pts_missing = 3;
  PointsFilter filter(cfg, kCam);
  Rng rng(68);
  const BBox box{300, 200, 340, 240};
  const Pose still = camera_pose_from_body({0, 0, 30}, 0.0, 1.0);
  filter.tick(std::span(&box, 1), still, rng);
  for (int i = 0; i < 10; ++i) {
    const auto r = filter.tick(std::span(&box, 1), still, rng);
    EXPECT_EQ(r.associated.size(), 1u);
    EXPECT_TRUE(r.updates.empty());
  }
  EXPECT_EQ(filter.targets().size(), 1u);
  EXPECT_EQ(filter.targets()[0].miss_counter, 0);
}

}  // namespace
}  // namespace tomap
