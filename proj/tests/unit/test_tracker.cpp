#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "evtrack/error.hpp"
#include "evtrack/profile.hpp"
#include "evtrack/simulator.hpp"
#include "evtrack/textures.hpp"
#include "evtrack/tracker.hpp"
#include "helpers.hpp"

using namespace evtrack;

namespace {

std::shared_ptr<const GradientField> ramp_template(int w, int h, double a, double b) {
  return std::make_shared<const GradientField>(
      gradient(test::make_image(w, h, [=](int x, int y) { return a * x + b * y; })));
}

std::shared_ptr<const GradientField> noise_template(int size, std::uint64_t seed) {
  return std::make_shared<const GradientField>(gradient(textures::value_noise(size, size, 6.0, seed, {.blur_sigma = 1.0})));
}

// Square of side 41 with corners at 30 and 70, lightly blurred.
LogFrame square_image() {
  const ImageD img = test::make_image(100, 100, [](int x, int y) {
    return x >= 30 && x <= 70 && y >= 30 && y <= 70 ? 1.0 : 0.0;
  });
  return {0.0, gaussian_blur(img, 1.0)};
}

IncrementPatch as_increment(const PredictedPatch& p) { return {p.window, p.values}; }

FeatureState probe_at(Vec2 anchor, std::shared_ptr<const GradientField> templ = nullptr) {
  FeatureState s;
  s.anchor = anchor;
  s.templ = std::move(templ);
  return s;
}

}  // namespace

TEST_SUITE("tracker") {

TEST_CASE("configuration validation") {
  TrackerConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.max_events_resolved() == 5 * 25 * 25);
  c.patch_size = 24;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrackerConfig{};
  c.max_events = 10;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrackerConfig{};
  c.contrast_estimate = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrackerConfig{};
  c.harris.response_quantile = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("feature detection") {
  TrackerConfig cfg;
  SUBCASE("constant image has no corners") {
    const LogFrame f = test::make_log(100, 100, [](int, int) { return 0.3; });
    CHECK(detect_features(f, gradient(f), cfg).empty());
  }
  SUBCASE("square corners are found and agree with the response maximum") {
    const LogFrame f = square_image();
    const GradientField g = gradient(f);
    const auto corners = detect_features(f, g, cfg);
    REQUIRE(corners.size() == 4);
    for (const Corner& c : corners) {
      const double ex = c.position.x < 50 ? 30 : 70, ey = c.position.y < 50 ? 30 : 70;
      CHECK(std::hypot(c.position.x - ex, c.position.y - ey) <= 2.0);
    }
    for (std::size_t i = 1; i < corners.size(); ++i) CHECK(corners[i - 1].response >= corners[i].response);

    const ImageD r = harris_response(g, cfg.harris.window_sigma, cfg.harris.k);
    double best = -1e300;
    for (int y = 25; y <= 74; ++y)
      for (int x = 25; x <= 74; ++x) best = std::max(best, r(x, y));
    CHECK(corners.front().response == doctest::Approx(best));
    CHECK(r(corners.front().position.x, corners.front().position.y) == best);
  }
  SUBCASE("wide suppression keeps one diagonal pair") {
    const LogFrame f = square_image();
    cfg.harris.nms_radius = 50;
    const auto corners = detect_features(f, gradient(f), cfg);
    REQUIRE(corners.size() == 2);
    CHECK(std::abs(corners[0].position.x - corners[1].position.x) > 30);
    CHECK(std::abs(corners[0].position.y - corners[1].position.y) > 30);
  }
  SUBCASE("single checkerboard junction") {
    const ImageD img = test::make_image(100, 100, [](int x, int y) { return (x < 50) == (y < 50) ? 1.0 : 0.0; });
    const LogFrame f{0.0, gaussian_blur(img, 1.0)};
    const GradientField g = gradient(f);
    const auto corners = detect_features(f, g, cfg);
    REQUIRE(corners.size() == 1);
    CHECK(std::abs(corners[0].position.x - 49.5) <= 1.0);
    CHECK(std::abs(corners[0].position.y - 49.5) <= 1.0);
    const ImageD r = harris_response(g, cfg.harris.window_sigma, cfg.harris.k);
    for (int y = 25; y <= 74; ++y)
      for (int x = 25; x <= 74; ++x) CHECK(r(x, y) <= r(corners[0].position.x, corners[0].position.y));
  }
  SUBCASE("two junctions 4 px apart collapse under suppression") {
    // Top end of a bright bar 4 px wide: corners at x = 48 and x = 51, y = 50.
    const ImageD img = test::make_image(100, 100, [](int x, int y) { return x >= 48 && x <= 51 && y >= 50 ? 1.0 : 0.0; });
    const LogFrame f{0.0, gaussian_blur(img, 0.7)};
    cfg.harris.nms_radius = 10;
    const auto corners = detect_features(f, gradient(f), cfg);
    REQUIRE(corners.size() == 1);
    CHECK(std::abs(corners[0].position.x - 49.5) <= 3.0);
    CHECK(std::abs(corners[0].position.y - 50) <= 3.0);
  }
  SUBCASE("max_features truncates") {
    const LogFrame f = square_image();
    cfg.harris.max_features = 3;
    CHECK(detect_features(f, gradient(f), cfg).size() == 3);
  }
  SUBCASE("frames smaller than three patches are rejected") {
    const LogFrame f = test::make_log(70, 100, [](int, int) { return 0.0; });
    CHECK_THROWS_AS(detect_features(f, gradient(f), cfg), SizeError);
  }
}

TEST_CASE("feature initialisation") {
  TrackerConfig cfg;
  const double a = 0.05, b = 0.02;
  const auto templ = ramp_template(80, 80, a, b);
  const FeatureState s = init_feature(7, {40, 41}, templ, cfg);
  CHECK(s.id == 7);
  CHECK(s.anchor.x == 40.0);
  CHECK(s.anchor.y == 41.0);
  CHECK(s.warp.theta == 0.0);
  CHECK(s.warp.t.x == 0.0);
  CHECK(s.warp.t.y == 0.0);
  CHECK(!s.flow.has_value());
  CHECK(s.buffer.empty());
  CHECK(s.status == FeatureStatus::active);

  // Median over eight directions of P^2 |grad . v|.
  std::vector<double> m;
  for (int k = 0; k < 8; ++k) m.push_back(625.0 * std::abs(a * std::cos(k * M_PI / 4) + b * std::sin(k * M_PI / 4)));
  std::sort(m.begin(), m.end());
  CHECK(s.budget == int(std::lround(0.5 * (m[3] + m[4]))));

  CHECK_THROWS_AS(init_feature(0, {24, 40}, templ, cfg), PlacementError);
  CHECK_THROWS_AS(init_feature(0, {40, 55}, templ, cfg), PlacementError);
  CHECK_NOTHROW(init_feature(0, {25, 54}, templ, cfg));
}

TEST_CASE("event budget") {
  TrackerConfig cfg;
  FeatureState s = init_feature(0, {40, 40}, ramp_template(80, 80, 0.05, 0.0), cfg);
  CHECK_THROWS_AS(update_event_budget(s, cfg), ContractError);
  s.flow = FlowDirection(0.0);
  CHECK(update_event_budget(s, cfg) == 31);  // round(625 * 0.05)
  CHECK(expected_event_mass(s, {1, 0}, 25) == doctest::Approx(31.25));
  cfg.contrast_estimate = 0.4;
  CHECK(update_event_budget(s, cfg) == 78);
  cfg.contrast_estimate = 1.0;
  s.flow = FlowDirection(M_PI / 2);
  CHECK(update_event_budget(s, cfg) == cfg.min_events);

  FeatureState edge = init_feature(0, {40, 40},
      std::make_shared<const GradientField>(gradient(test::make_image(80, 80, [](int x, int) { return x < 40 ? 0.0 : 1.0; }))), cfg);
  edge.flow = FlowDirection(M_PI / 2);
  CHECK(update_event_budget(edge, cfg) == cfg.min_events);
  edge.flow = FlowDirection(0.0);
  CHECK(update_event_budget(edge, cfg) > cfg.min_events);

  FeatureState steep = init_feature(0, {40, 40}, ramp_template(80, 80, 10.0, 0.0), cfg);
  steep.flow = FlowDirection(0.0);
  CHECK(update_event_budget(steep, cfg) == 5 * 625);
  cfg.max_events = 100;
  CHECK(update_event_budget(steep, cfg) == 100);
}

TEST_CASE("event ingestion") {
  TrackerConfig cfg;
  cfg.patch_size = 5;
  FeatureState s = init_feature(0, {20, 20}, ramp_template(50, 50, 0.3, 0.0), cfg);
  s.budget = 2;
  CHECK(!ingest_event(s, {0.0, 23, 20, 1}, cfg));
  CHECK(s.buffer.empty());
  CHECK(!ingest_event(s, {0.1, 22, 18, 1}, cfg));
  CHECK(ingest_event(s, {0.2, 18, 22, -1}, cfg));
  CHECK(s.buffer.size() == 2);
  s.status = FeatureStatus::lost;
  CHECK(!ingest_event(s, {0.3, 20, 20, 1}, cfg));
  CHECK(s.buffer.size() == 2);

  FeatureState q = init_feature(1, {20, 20}, ramp_template(50, 50, 0.3, 0.0), cfg);
  q.budget = 10;
  for (int i = 0; i < 9; ++i) CHECK(!ingest_event(q, {0.01 * i, 20, 20, 1}, cfg));
  CHECK(ingest_event(q, {0.1, 20, 20, 1}, cfg));
}

TEST_CASE("features from one frame are independent") {
  TrackerConfig cfg;
  const auto templ = ramp_template(100, 100, 0.05, 0.02);
  FeatureState a = init_feature(0, {40, 40}, templ, cfg);
  const FeatureState b = init_feature(1, {60, 60}, templ, cfg);
  const FeatureState b0 = b;
  a.buffer.push_back({0.0, 40, 40, 1});
  a.warp = {0.1, {2, 2}};
  a.flow = FlowDirection(1.0);
  a.budget = 99;
  CHECK(b.buffer.empty());
  CHECK(b.warp.theta == b0.warp.theta);
  CHECK(!b.flow.has_value());
  CHECK(b.budget == b0.budget);
  CHECK(templ->dx(50, 50) == doctest::Approx(0.05));
}

TEST_CASE("registration cost examples and range") {
  const auto templ = noise_template(100, 3);
  const Vec2 anchor{50, 50};
  const WarpSE2 local{0.05, {1.5, -0.7}};
  const FeatureState probe = probe_at(anchor, templ);
  const FlowDirection flow(0.6);
  const IncrementPatch inc = as_increment(predict(*templ, probe.absolute(local), flow.unit(), {51, 49}, 25));
  const Registration reg(templ, anchor, inc);
  CHECK(reg.cost(local, flow) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(reg.cost(local, FlowDirection(0.6 + M_PI)) == doctest::Approx(4.0).epsilon(1e-12));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int i = 0; i < 50; ++i) {
    const double c = reg.cost({0.1 * U(rng), {3 * U(rng), 3 * U(rng)}}, FlowDirection(M_PI * U(rng)));
    CHECK(c >= 0.0);
    CHECK(c <= 4.0 + 1e-12);
  }
  CHECK_THROWS_AS(reg.cost({0, {40, 0}}, flow), BoundsError);
}

TEST_CASE("objective on simulated events is low at the true warp") {
  const LogFrame tex = textures::value_noise(160, 140, 6.0, 21, {.blur_sigma = 1.0});
  SimConfig sim;
  sim.width = 100;
  sim.height = 80;
  sim.duration = 0.1;
  sim.interpolation = Interpolation::cubic;
  const Vec2 v{20, 0};
  const auto traj = MotionTrajectory::constant_velocity({-30, -30}, v, 0.1);
  const EventStream ev = simulate_events(tex, traj, sim);
  const LogFrame f0 = render_frame(tex, traj, 0.0, sim);
  const auto templ = std::make_shared<const GradientField>(gradient(f0));
  TrackerConfig cfg;
  const auto corners = detect_features(f0, *templ, cfg);
  REQUIRE(!corners.empty());
  FeatureState s = init_feature(0, corners.front().position, templ, cfg);
  // Events over the first pixel of motion; the window does not move.
  for (const Event& e : ev.events)
    if (e.t < 0.05 && s.window(cfg.patch_size).contains(e.x, e.y)) s.buffer.push_back(e);
  REQUIRE(s.buffer.size() > 50);
  const double truth = objective(s, {0, {0.5, 0}}, FlowDirection(0.0), cfg);
  CHECK(truth < cfg.loss_threshold);
  CHECK(objective(s, {0, {5.5, 0}}, FlowDirection(0.0), cfg) > truth);
  CHECK(objective(s, {0, {0.5, 0}}, FlowDirection(M_PI), cfg) > truth);
}

TEST_CASE("objective is invariant to the contrast scale") {
  const auto templ = noise_template(100, 5);
  const FeatureState probe = probe_at({50, 50}, templ);
  PredictedPatch p = predict(*templ, probe.absolute({0, {1, 1}}), {0.3, 0.9}, {50, 50}, 25);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> N(0, 0.1);
  for (double& x : p.values) x = std::round(x * 4 + N(rng));
  const Registration r1(templ, probe.anchor, as_increment(p));
  for (double k : {0.1, 1.0, 7.3}) {
    IncrementPatch q = as_increment(p);
    for (double& x : q.values) x *= k;
    const Registration rk(templ, probe.anchor, q);
    for (double ang : {0.0, 1.0, 2.5}) {
      const WarpSE2 w{0.02, {0.8, 1.3}};
      CHECK(std::abs(rk.cost(w, FlowDirection(ang)) - r1.cost(w, FlowDirection(ang))) <= 1e-12);
    }
  }
}

TEST_CASE("optimisation recovers a synthetic warp") {
  const auto templ = noise_template(100, 7);
  TrackerConfig cfg;
  FeatureState s = init_feature(0, {50, 50}, templ, cfg);
  const WarpSE2 truth{0.0, {2.0, 0.0}};
  const FlowDirection flow(0.0);
  const PatchWindow win{{52, 50}, 25};
  const IncrementPatch inc = as_increment(predict(*templ, s.absolute(truth), flow.unit(), win.center, 25));

  SUBCASE("warm start") {
    s.warp = {0.0, {1.4, 0.3}};
    s.flow = FlowDirection(0.2);
    const OptimizeResult r = optimize(s, inc, cfg);
    CHECK(!r.degenerate);
    CHECK(!r.out_of_bounds);
    CHECK(norm(r.warp.t - truth.t) < 1e-3);
    CHECK(std::abs(r.warp.theta) < 1e-3);
    CHECK(angle_distance(r.flow.angle(), 0.0) < 1e-3);
    CHECK(r.cost < 1e-8);
  }
  SUBCASE("cold start seeds the flow from eight directions") {
    s.warp = {0.0, {1.6, 0.0}};
    const OptimizeResult r = optimize(s, inc, cfg);
    CHECK(norm(r.warp.t - truth.t) < 1e-3);
    CHECK(angle_distance(r.flow.angle(), 0.0) < 1e-3);
  }
  SUBCASE("empty increment is degenerate") {
    const OptimizeResult r = optimize(s, IncrementPatch{win, std::vector<double>(625, 0.0)}, cfg);
    CHECK(r.degenerate);
  }
  SUBCASE("a start outside the template is reported") {
    s.warp = {0.0, {45.0, 0.0}};
    const OptimizeResult r = optimize(s, inc, cfg);
    CHECK(r.out_of_bounds);
  }
}

TEST_CASE("optimisation on a simulated scene recovers a 2 px translation") {
  const LogFrame tex = textures::value_noise(200, 200, 6.0, 13, {.blur_sigma = 1.0});
  SimConfig sim;
  sim.width = 120;
  sim.height = 120;
  sim.interpolation = Interpolation::cubic;
  const double speed = 30.0;
  // Increment while the scene moves from 1.5 to 2.5 px; the midpoint is 2 px.
  sim.duration = 2.5 / speed;
  sim.frame_period = sim.duration;
  const auto traj = MotionTrajectory::constant_velocity({-40, -40}, {speed, 0}, sim.duration);
  const LogFrame f0 = quantize_8bit(render_frame(tex, traj, 0.0, sim));
  const auto templ = std::make_shared<const GradientField>(gradient(f0));
  TrackerConfig cfg;
  const auto corners = detect_features(f0, *templ, cfg);
  REQUIRE(corners.size() >= 3);
  for (std::size_t k = 0; k < 3; ++k) {
    const FeatureState s = init_feature(int(k), corners[k].position, templ, cfg);
    // Noise-free reading of the increment; event lag is covered elsewhere.
    const IncrementPatch inc = exact_increment(tex, traj, 1.5 / speed, sim.duration, s.window(cfg.patch_size), sim);
    const OptimizeResult r = optimize(s, inc, cfg);
    CAPTURE(k);
    CHECK(norm(r.warp.t - Vec2{2.0, 0.0}) <= 0.2);
    CHECK(angle_distance(r.flow.angle(), 0.0) <= 10.0 * M_PI / 180.0);
  }
}

TEST_CASE("black-and-white patch has a single minimum on the translation grid") {
  // Binary checkerboard with 16 px squares, junction at the anchor, moving
  // diagonally. Edges blurred at 2 px: with sharper edges the cost is flat
  // beyond a narrow basin and grid ripples there form extra minima.
  const LogFrame tex = textures::checkerboard(200, 200, 16, {.blur_sigma = 2.0});
  SimConfig sim;
  sim.width = 120;
  sim.height = 120;
  sim.interpolation = Interpolation::cubic;
  const Vec2 v{24, 18};
  const double speed = norm(v), ta = 4.0 / speed, tb = 5.0 / speed;
  sim.duration = tb;
  sim.frame_period = tb;
  const auto traj = MotionTrajectory::constant_velocity({-40, -40}, v, tb);
  const EventStream ev = simulate_events(tex, traj, sim);
  const auto templ = std::make_shared<const GradientField>(gradient(quantize_8bit(render_frame(tex, traj, 0.0, sim))));
  const Vec2 anchor{56, 56};
  const Vec2 pos = anchor + (0.5 * (ta + tb)) * v;
  const PatchWindow win{round_to_pixel(pos), 25};
  std::vector<Event> in;
  for (const Event& e : ev.events)
    if (e.t >= ta && e.t < tb && win.contains(e.x, e.y)) in.push_back(e);
  const Registration reg(templ, anchor, accumulate(in, win.center, 25));
  const CostGrid g = proposed_profile(reg, {0.0, pos - anchor}, FlowDirection::from_vector(v), 5.0, 0.25);
  REQUIRE(g.n == 41);
  CHECK(local_minima(g).size() == 1);
  const GridCell m = argmin(g);
  CHECK(std::abs(m.i - 20) <= 1);
  CHECK(std::abs(m.j - 20) <= 1);

  const CostGrid again = proposed_profile(reg, {0.0, pos - anchor}, FlowDirection::from_vector(v), 5.0, 0.25);
  for (std::size_t i = 0; i < g.values.size(); ++i)
    if (!std::isnan(g.values[i])) CHECK(again.values[i] == g.values[i]);
}

TEST_CASE("objective equals 2 (1 - <n1, n2>)") {
  const auto templ = noise_template(100, 8);
  const FeatureState probe = probe_at({50, 50}, templ);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> N(0, 1);
  IncrementPatch inc{{{50, 50}, 25}, std::vector<double>(625)};
  for (double& x : inc.values) x = std::round(2 * N(rng));
  const Registration reg(templ, probe.anchor, inc);
  const auto n1 = normalize(inc.values);
  for (int i = 0; i < 20; ++i) {
    const WarpSE2 w{0.05 * N(rng), {N(rng), N(rng)}};
    const FlowDirection fl(3 * N(rng));
    const auto n2 = normalize(predict(*templ, probe.absolute(w), fl.unit(), {50, 50}, 25).values);
    double ip = 0.0;
    for (std::size_t k = 0; k < n1.size(); ++k) ip += n1[k] * n2[k];
    CHECK(reg.cost(w, fl) == doctest::Approx(2.0 * (1.0 - ip)).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("update finalisation") {
  TrackerConfig cfg;
  FeatureState s = init_feature(3, {40, 40}, ramp_template(100, 100, 0.05, 0.0), cfg);
  s.buffer.push_back({0.0, 40, 40, 1});
  FeatureTrack track{3, {{0.0, 40.0, 40.0}}};
  OptimizeResult r;
  r.warp = {0.01, {1.5, -0.5}};
  r.flow = FlowDirection(0.0);

  SUBCASE("cost above the threshold loses the feature") {
    r.cost = 1.7;
    CHECK(finalize_update(s, r, 0.2, track, 100, 100, cfg) == FeatureStatus::lost);
    CHECK(s.status == FeatureStatus::lost);
    CHECK(track.reason == Disposal::lost);
    CHECK(track.t_disposed == 0.2);
    CHECK(track.samples.size() == 1);
    CHECK(s.buffer.empty());
  }
  SUBCASE("interior commit appends a sample and refreshes the budget") {
    r.cost = 0.3;
    CHECK(finalize_update(s, r, 0.2, track, 100, 100, cfg) == FeatureStatus::active);
    REQUIRE(track.samples.size() == 2);
    CHECK(track.samples[1].t == 0.2);
    CHECK(track.samples[1].x == 41.5);
    CHECK(track.samples[1].y == 39.5);
    CHECK(s.warp.theta == 0.01);
    CHECK(s.flow.has_value());
    CHECK(s.buffer.empty());
    CHECK(s.budget == update_event_budget(s, cfg));
  }
  SUBCASE("leaving the sensor exits the feature") {
    r.cost = 0.3;
    r.warp.t = {48.0, 0.0};
    CHECK(finalize_update(s, r, 0.2, track, 100, 100, cfg) == FeatureStatus::exited);
    CHECK(track.reason == Disposal::exited);
  }
  SUBCASE("degenerate result loses the feature") {
    r.degenerate = true;
    CHECK(finalize_update(s, r, 0.2, track, 100, 100, cfg) == FeatureStatus::lost);
  }
}

TEST_CASE("warp about the anchor") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int i = 0; i < 20; ++i) {
    const FeatureState s = probe_at({40 + 10 * U(rng), 30 + 10 * U(rng)});
    const WarpSE2 local{U(rng), {3 * U(rng), 3 * U(rng)}};
    const Vec2 u{50 * U(rng), 50 * U(rng)};
    const Vec2 want = s.anchor + local.rotate(u - s.anchor) + local.t;
    const Vec2 got = s.absolute(local).apply(u);
    CHECK(norm(got - want) < 1e-12);
    CHECK(norm(s.absolute(local).apply(s.anchor) - (s.anchor + local.t)) < 1e-12);

    const WarpSE2 other{U(rng), {U(rng), U(rng)}};
    const Vec2 c1 = compose(local, other).apply(u), c2 = local.apply(other.apply(u));
    CHECK(norm(c1 - c2) < 1e-12);
    CHECK(norm(compose(local, local.inverse()).apply(u) - u) < 1e-12);
  }
}

TEST_CASE("forward-difference Jacobian converges at first order") {
  auto f = [](const Eigen::Vector2d& x, std::vector<double>& r) {
    r[0] = std::sin(x[0]) * x[1];
    r[1] = std::exp(0.5 * x[0]) - x[1] * x[1];
    r[2] = x[0] * x[0] * x[1];
    return true;
  };
  const Eigen::Vector2d x(0.4, -1.3);
  Eigen::MatrixXd exact(3, 2);
  exact << std::cos(x[0]) * x[1], std::sin(x[0]), 0.5 * std::exp(0.5 * x[0]), -2 * x[1], 2 * x[0] * x[1], x[0] * x[0];
  std::vector<double> r(3);
  f(x, r);
  double prev_fwd = 1e9, prev_ctr = 1e9;
  for (double h : {1e-2, 1e-3, 1e-4}) {
    const double ef = (forward_jacobian<2>(f, x, r, h) - exact).norm();
    const double ec = (central_jacobian<2>(f, x, 3, h) - exact).norm();
    CHECK(ef < 2.0 * h);
    CHECK(ec < 2.0 * h * h);
    CHECK(ef < prev_fwd);
    CHECK(ec < prev_ctr);
    prev_fwd = ef;
    prev_ctr = ec;
  }
}

TEST_CASE("Levenberg-Marquardt solves a small least-squares problem") {
  auto rosen = [](const Eigen::Vector2d& x, std::vector<double>& r) {
    r[0] = 10 * (x[1] - x[0] * x[0]);
    r[1] = 1 - x[0];
    return true;
  };
  LmOptions opt;
  opt.max_iterations = 200;
  opt.parameter_tolerance = 1e-12;
  opt.cost_tolerance = 1e-20;
  const auto s = levenberg_marquardt<2>(rosen, Eigen::Vector2d(-1.2, 1.0), 2, opt);
  CHECK(std::abs(s.x[0] - 1.0) < 1e-5);
  CHECK(std::abs(s.x[1] - 1.0) < 1e-5);
  auto never = [](const Eigen::Vector2d&, std::vector<double>&) { return false; };
  CHECK(levenberg_marquardt<2>(never, Eigen::Vector2d(0, 0), 1, opt).stop == LmStop::invalid_start);
}

TEST_CASE("tracker routing and stream handling") {
  TrackerConfig cfg;
  const LogFrame f0 = test::make_log(100, 100, [](int x, int y) { return 0.05 * x + 0.03 * y; });

  SUBCASE("overlapping windows both receive an event") {
    Tracker tr(cfg, 100, 100);
    tr.set_initial_corners({{45, 50}, {52, 50}, {10, 10}});
    tr.add_frame(f0);
    REQUIRE(tr.features().size() == 2);  // the border corner is dropped
    tr.add_event({0.01, 49, 50, 1});
    CHECK(tr.features()[0].buffer.size() == 1);
    CHECK(tr.features()[1].buffer.size() == 1);
    tr.add_event({0.02, 33, 50, 1});
    CHECK(tr.features()[0].buffer.size() == 2);
    CHECK(tr.features()[1].buffer.size() == 1);
  }
  SUBCASE("empty stream leaves seeded tracks active") {
    const std::vector<PixelPos> corners{{40, 40}, {60, 55}};
    const auto tracks = track_stream(std::span(&f0, 1), EventStream{100, 100, {}}, cfg, corners);
    REQUIRE(tracks.size() == 2);
    for (const FeatureTrack& t : tracks) {
      CHECK(t.reason == Disposal::active);
      CHECK(t.samples.size() == 1);
      CHECK(t.age() == 0.0);
    }
  }
  SUBCASE("frames are required") {
    CHECK_THROWS_AS(track_stream({}, EventStream{100, 100, {}}, cfg), ContractError);
  }
  SUBCASE("mismatched frame size") {
    Tracker tr(cfg, 120, 100);
    CHECK_THROWS_AS(tr.add_frame(f0), SizeError);
  }
}

TEST_CASE("tracking a simulated translation") {
  const LogFrame tex = textures::value_noise(260, 220, 6.0, 4, {.blur_sigma = 1.0});
  SimConfig sim;
  sim.width = 180;
  sim.height = 150;
  sim.duration = 0.5;
  sim.interpolation = Interpolation::cubic;
  const Vec2 v{24, 12};
  const auto traj = MotionTrajectory::constant_velocity({-40, -35}, v, sim.duration);
  const EventStream ev = simulate_events(tex, traj, sim);
  const std::vector<LogFrame> frames{quantize_8bit(render_frame(tex, traj, 0.0, sim))};
  TrackerConfig cfg;
  cfg.harris.max_features = 10;
  const auto tracks = track_stream(frames, ev, cfg);
  REQUIRE(tracks.size() == 10);
  int survived = 0;
  double err = 0.0;
  std::size_t samples = 0;
  for (const FeatureTrack& t : tracks) {
    if (t.reason == Disposal::lost) continue;
    ++survived;
    CHECK(t.samples.size() > 5);
    const Vec2 start{t.samples.front().x, t.samples.front().y};
    for (const TrackPoint& p : t.samples) {
      err += norm(Vec2{p.x, p.y} - (start + p.t * v));
      ++samples;
    }
  }
  REQUIRE(samples > 0);
  CHECK(err / double(samples) <= 0.5);
  CHECK(survived >= 8);

  const auto again = track_stream(frames, ev, cfg);
  REQUIRE(again.size() == tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    REQUIRE(again[i].samples.size() == tracks[i].samples.size());
    for (std::size_t k = 0; k < tracks[i].samples.size(); ++k) {
      CHECK(again[i].samples[k].x == tracks[i].samples[k].x);
      CHECK(again[i].samples[k].y == tracks[i].samples[k].y);
      CHECK(again[i].samples[k].t == tracks[i].samples[k].t);
    }
  }
}

}  // TEST_SUITE
