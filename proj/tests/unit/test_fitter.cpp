#include <gtest/gtest.h>

#include <cmath>

#include "drc/eval.hpp"
#include "drc/fitter.hpp"
#include "drc/fusion.hpp"

using namespace drc;

namespace {

std::vector<Observation> render_views(const TestShape& s, ObservationKind kind, int n, std::uint64_t seed,
                                      int size = 64) {
  ViewRingOptions opts;
  opts.width = size;
  opts.height = size;
  std::vector<Observation> out;
  for (const Camera& c : sample_view_ring(n, -20, 30, 2.0, seed, opts)) {
    const AuxGrid* aux = kind == ObservationKind::color ? &s.color : nullptr;
    out.push_back(render(s.occupancy, aux, c, kind));
  }
  return out;
}

}  // namespace

TEST(Adam, FirstStepMovesByStepSize) {
  Adam opt(2, AdamParams{0.1, 0.9, 0.999, 1e-8});
  std::vector<double> p{1.0, -1.0};
  opt.step(p, std::vector<double>{3.0, -0.01});
  // Bias-corrected first step is step * g / |g|.
  EXPECT_NEAR(p[0], 0.9, 1e-6);
  EXPECT_NEAR(p[1], -0.9, 1e-5);
  EXPECT_EQ(opt.steps(), 1);
  EXPECT_THROW(Adam(1, AdamParams{0.0, 0.9, 0.999, 1e-8}), std::invalid_argument);
}

TEST(Squash, SigmoidAndChainRules) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(800.0), 1.0, 0);
  EXPECT_NEAR(sigmoid(-800.0), 0.0, 1e-300);
  const std::vector<double> g = chain_sigmoid(std::vector<double>{2.0}, std::vector<double>{0.25});
  EXPECT_DOUBLE_EQ(g[0], 2.0 * 0.25 * 0.75);
  // Softmax chain: with p uniform and gradient on one class only.
  const std::vector<double> s = chain_softmax(std::vector<double>{1.0, 0.0}, std::vector<double>{0.5, 0.5}, 2);
  EXPECT_DOUBLE_EQ(s[0], 0.25);
  EXPECT_DOUBLE_EQ(s[1], -0.25);
}

TEST(ChainRule, LogitGradientMatchesFiniteDifference) {
  const GridGeometry geo = GridGeometry::uniform(Dims{4, 4, 4}, unit_cube());
  std::vector<double> theta(geo.cell_count());
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = std::sin(1.3 * static_cast<double>(i));
  auto grid_of = [&](const std::vector<double>& th) {
    std::vector<double> x(th.size());
    for (std::size_t i = 0; i < th.size(); ++i) x[i] = sigmoid(th[i]);
    return OccupancyGrid(geo, x);
  };
  ViewRingOptions ring;
  ring.width = ring.height = 8;
  const Camera cam = sample_view_ring(1, 10, 10, 2.0, 1, ring)[0];
  std::vector<RaySample> rays;
  for (int v = 0; v < 8; ++v) {
    for (int u = 0; u < 8; ++u) {
      rays.push_back(RaySample{pixel_to_ray(cam, u + 0.5, v + 0.5), RayObservation::depth_of(1.6 + 0.02 * u)});
    }
  }
  const OccupancyGrid g = grid_of(theta);
  const ViewLoss vl = view_loss(g, nullptr, rays);
  const std::vector<double> analytic = chain_sigmoid(vl.grad_x, g.values());
  const double h = 1e-6;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    std::vector<double> tp = theta, tm = theta;
    tp[k] += h;
    tm[k] -= h;
    const double numeric = (view_loss(grid_of(tp), nullptr, rays).loss - view_loss(grid_of(tm), nullptr, rays).loss) /
                           (2 * h);
    EXPECT_LE(std::abs(numeric - analytic[k]), 1e-4 * std::max({std::abs(numeric), std::abs(analytic[k]), 1e-4}))
        << "cell " << k;
  }
}

TEST(SampleRays, WeightsAndDeterminism) {
  const TestShape s = make_test_shape("sphere", Dims{16, 16, 16});
  const Observation o = render_views(s, ObservationKind::mask, 1, 3)[0];
  const auto a = sample_rays(o, 500, 5.0, 9, 2);
  const auto b = sample_rays(o, 500, 5.0, 9, 2);
  ASSERT_EQ(a.size(), 500u);
  int fg = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].ray.direction, b[i].ray.direction);
    const bool foreground = a[i].observation.background == 0.0;
    EXPECT_EQ(a[i].observation.weight, foreground ? 5.0 : 1.0);
    fg += foreground ? 1 : 0;
  }
  EXPECT_GT(fg, 0);
  for (const RaySample& r : sample_rays(o, 100, 1.0, 9, 2)) EXPECT_EQ(r.observation.weight, 1.0);
  EXPECT_NE(sample_rays(o, 10, 5.0, 9, 3)[0].ray.direction, a[0].ray.direction);
  EXPECT_THROW(sample_rays(o, 0, 5.0, 9, 2), std::invalid_argument);

  const BinaryGrid empty(s.occupancy.geometry(), std::vector<std::uint8_t>(s.occupancy.size(), 0));
  const Observation bg = render(empty, nullptr, o.camera, ObservationKind::mask);
  for (const RaySample& r : sample_rays(bg, 200, 5.0, 1, 0)) EXPECT_EQ(r.observation.weight, 1.0);
}

TEST(Fit, ZeroIterationsReturnsInitialization) {
  const TestShape s = make_test_shape("sphere", Dims{8, 8, 8});
  const auto obs = render_views(s, ObservationKind::depth, 2, 1, 16);
  FitConfig cfg;
  cfg.iterations = 0;
  const FitResult r = fit(obs, s.occupancy.geometry(), ObservationKind::depth, cfg);
  for (double x : r.occupancy.values()) EXPECT_EQ(x, 0.5);
  EXPECT_TRUE(r.report.loss_trace.empty());
}

TEST(Fit, RejectsBadInput) {
  const TestShape s = make_test_shape("sphere", Dims{8, 8, 8});
  const auto obs = render_views(s, ObservationKind::depth, 1, 1, 16);
  EXPECT_THROW(fit({}, s.occupancy.geometry(), ObservationKind::depth, FitConfig{}), std::invalid_argument);
  EXPECT_THROW(fit(obs, s.occupancy.geometry(), ObservationKind::mask, FitConfig{}), std::invalid_argument);
}

TEST(Fit, FullImageDepthDescentOnFirstStep) {
  const TestShape s = make_test_shape("sphere", Dims{16, 16, 16});
  const auto obs = render_views(s, ObservationKind::depth, 2, 4, 32);
  FitConfig cfg;
  cfg.iterations = 2;
  cfg.all_pixels = true;
  cfg.adam.step_size = 1e-3;
  const FitResult r = fit(obs, s.occupancy.geometry(), ObservationKind::depth, cfg);
  ASSERT_EQ(r.report.loss_trace.size(), 2u);
  EXPECT_LT(r.report.loss_trace[1], r.report.loss_trace[0]);
}

TEST(Fit, SingleMaskViewDecreasesLossAndClearsCarvedCells) {
  const TestShape s = make_test_shape("sphere", Dims{16, 16, 16});
  const auto obs = render_views(s, ObservationKind::mask, 1, 2, 48);
  FitConfig cfg;
  cfg.iterations = 150;
  cfg.all_pixels = true;
  const FitResult r = fit(obs, s.occupancy.geometry(), ObservationKind::mask, cfg);
  for (int i = 1; i < 10; ++i) EXPECT_LT(r.report.loss_trace[i], r.report.loss_trace[i - 1]) << "iteration " << i;
  // Cells crossed by a background ray end up mostly empty.
  const BinaryGrid hull = carve_masks(obs, s.occupancy.geometry());
  std::size_t carved = 0, cleared = 0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    if (hull.occupied(i)) continue;
    ++carved;
    cleared += r.occupancy[i] > 0.5 ? 1 : 0;
  }
  ASSERT_GT(carved, 0u);
  EXPECT_GE(static_cast<double>(cleared), 0.95 * static_cast<double>(carved));
}

TEST(Fit, DeterministicUnderSeed) {
  const TestShape s = make_test_shape("sphere", Dims{8, 8, 8});
  const auto obs = render_views(s, ObservationKind::depth, 3, 5, 24);
  FitConfig cfg;
  cfg.iterations = 20;
  cfg.rays_per_iteration = 300;
  cfg.seed = 17;
  const FitResult a = fit(obs, s.occupancy.geometry(), ObservationKind::depth, cfg);
  const FitResult b = fit(obs, s.occupancy.geometry(), ObservationKind::depth, cfg);
  EXPECT_EQ(a.report.loss_trace, b.report.loss_trace);
  EXPECT_TRUE(std::equal(a.occupancy.values().begin(), a.occupancy.values().end(), b.occupancy.values().begin()));
  cfg.seed = 18;
  EXPECT_NE(fit(obs, s.occupancy.geometry(), ObservationKind::depth, cfg).report.loss_trace, a.report.loss_trace);
}

TEST(Fit, ColorFitLearnsPayload) {
  const TestShape s = make_test_shape("cuboid", Dims{8, 8, 8});
  const auto obs = render_views(s, ObservationKind::color, 3, 6, 32);
  FitConfig cfg;
  cfg.iterations = 60;
  const FitResult r = fit(obs, s.occupancy.geometry(), ObservationKind::color, cfg);
  ASSERT_TRUE(r.aux.has_value());
  EXPECT_EQ(r.aux->kind(), AuxKind::color);
  EXPECT_LT(r.report.loss_trace.back(), r.report.loss_trace.front());
}
