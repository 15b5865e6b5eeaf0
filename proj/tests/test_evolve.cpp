#include <catch2/catch_amalgamated.hpp>

#include "mcfs/evolve.hpp"

using namespace mcfs;

namespace {

FlowState make_state(ProfileCurve curve, double history_span = 2e-3) {
  FlowState st;
  Component comp;
  comp.id = 0;
  comp.curve = std::move(curve);
  st.components.push_back(std::move(comp));
  st.next_id = 1;
  st.history_span = history_span;
  return st;
}

void run_to(FlowState& st, const StepperConfig& cfg, double T) {
  while (st.t < T - 1e-15) {
    double dt = std::min(suggested_dt(st, cfg), T - st.t);
    step(st, dt, cfg);
  }
}

double mean_sphere_radius(const ProfileCurve& c) {
  double acc = 0.0;
  for (size_t i = 0; i < c.size(); ++i) acc += std::hypot(c.x[i], c.r[i]);
  return acc / static_cast<double>(c.size());
}

double mean_radius(const ProfileCurve& c) {
  double acc = 0.0;
  for (double r : c.r) acc += r;
  return acc / static_cast<double>(c.size());
}

double min_lambda_axis(const ProfileCurve& c) {
  CurvatureField f = curvatures(c);
  double m = 1e300;
  for (double v : f.lambda_axis) m = std::min(m, v);
  return m;
}

}  // namespace

TEST_CASE("step: shrinking sphere tracks the exact solution") {
  StepperConfig cfg;
  FlowState st = make_state(make_sphere(1.0, cfg.spacing));
  run_to(st, cfg, 0.1);
  double expect = exact_sphere_radius(1.0, 3, 0.1);  // sqrt(0.6)
  CHECK(std::abs(mean_sphere_radius(st.components[0].curve) - expect) / expect <= 1e-3);
}

TEST_CASE("step: shrinking periodic cylinder tracks the exact solution") {
  StepperConfig cfg;
  FlowState st = make_state(make_periodic_cylinder(1.0, 4.0, cfg.spacing));
  run_to(st, cfg, 0.25);
  double expect = exact_cylinder_radius(1.0, 3, 0.25);  // sqrt(0.5)
  CHECK(std::abs(mean_radius(st.components[0].curve) - expect) / expect <= 1e-3);
}

TEST_CASE("step: N=4 anchors") {
  StepperConfig cfg;
  FlowState st = make_state(make_sphere(1.0, cfg.spacing, 4));
  run_to(st, cfg, 0.1);
  double expect = exact_sphere_radius(1.0, 4, 0.1);
  CHECK(std::abs(mean_sphere_radius(st.components[0].curve) - expect) / expect <= 1e-3);

  FlowState cyl = make_state(make_periodic_cylinder(1.0, 4.0, cfg.spacing, 4));
  run_to(cyl, cfg, 0.2);
  double ce = exact_cylinder_radius(1.0, 4, 0.2);
  CHECK(std::abs(mean_radius(cyl.components[0].curve) - ce) / ce <= 1e-3);
}

TEST_CASE("step: dumbbell self-convergence under refinement") {
  DumbbellSpec spec;
  spec.neck_length = 3.0;
  const double T = 0.006;
  auto run_at = [&](double h) {
    StepperConfig cfg;
    cfg.spacing = h;
    FlowState st = make_state(make_dumbbell(spec, h));
    run_to(st, cfg, T);
    return st.components[0].curve;
  };
  ProfileCurve c1 = run_at(0.03);
  ProfileCurve c2 = run_at(0.015);
  ProfileCurve c4 = run_at(0.0075);
  double d12 = hausdorff_distance(c1, c2);
  double trunc_est = d12 / (1.0 - 0.25);  // second-order Richardson estimate of the coarse error
  CHECK(hausdorff_distance(c1, c4) <= 3.0 * trunc_est);
}

TEST_CASE("step: rejects dt above the stability cap") {
  StepperConfig cfg;
  FlowState st = make_state(make_sphere(1.0, cfg.spacing));
  double cap = suggested_dt(st, cfg);
  CHECK_THROWS_AS(step(st, 10.0 * cap, cfg), Error);
}

TEST_CASE("step: singularity overrun reports an instructive error") {
  // run a pinching dumbbell far past its neck collapse without any trigger;
  // with the resolution floored, the radius must eventually cross zero and
  // the stepper must fail loudly rather than continue on garbage geometry
  StepperConfig cfg;
  cfg.spacing = 0.02;
  cfg.min_spacing = 2e-3;  // saturate resolution so the pinch is overrun
  DumbbellSpec spec;
  spec.neck_radius = 0.12;
  spec.neck_length = 2.0;
  FlowState st = make_state(make_dumbbell(spec, cfg.spacing));
  bool threw = false;
  try {
    for (int k = 0; k < 200000 && !st.components.empty(); ++k)
      step(st, suggested_dt(st, cfg), cfg);
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::singularity_overrun;
  }
  CHECK(threw);
}

TEST_CASE("advance_until_trigger: sphere hits H_trig=10 at the exact time") {
  StepperConfig cfg;
  FlowState st = make_state(make_sphere(1.0, cfg.spacing));
  TriggerInfo info = advance_until_trigger(st, cfg, 10.0, 1.0);
  REQUIRE(info.triggered);
  CHECK(std::abs(info.t - 0.24) <= 1e-3);
  CHECK(mean_sphere_radius(st.components[0].curve) == Catch::Approx(0.2).margin(5e-4));
  CHECK(std::abs(info.max_H - 10.0) <= cfg.trigger_tol * 10.0);
  CHECK_FALSE(info.attaining.empty());
}

TEST_CASE("advance_until_trigger: cylinder hits H_trig=10") {
  StepperConfig cfg;
  FlowState st = make_state(make_periodic_cylinder(1.0, 4.0, cfg.spacing));
  TriggerInfo info = advance_until_trigger(st, cfg, 10.0, 1.0);
  REQUIRE(info.triggered);
  CHECK(std::abs(info.t - 0.495) <= 1e-3);
}

TEST_CASE("advance_until_trigger: H_trig below initial max H triggers immediately") {
  StepperConfig cfg;
  FlowState st = make_state(make_sphere(1.0, cfg.spacing));
  TriggerInfo info = advance_until_trigger(st, cfg, 1.0, 1.0);
  REQUIRE(info.triggered);
  CHECK(info.t == 0.0);
  CHECK_FALSE(info.attaining.empty());
}

TEST_CASE("advance_until_trigger: T_max reached first returns a no-trigger marker") {
  StepperConfig cfg;
  FlowState st = make_state(make_sphere(1.0, cfg.spacing));
  TriggerInfo info = advance_until_trigger(st, cfg, 100.0, 0.01);
  CHECK_FALSE(info.triggered);
  CHECK(info.t == Catch::Approx(0.01).margin(1e-12));
}

TEST_CASE("history_window: cylinder history matches the exact shrinking cylinder") {
  StepperConfig cfg;
  double span = 0.01;
  FlowState st = make_state(make_periodic_cylinder(1.0, 4.0, cfg.spacing), span);
  run_to(st, cfg, 0.05);
  HistoryWindow w = history_window(st, st.components[0], span);
  REQUIRE(w.snapshots.size() >= 5);
  CHECK_FALSE(w.partial);
  for (const auto& snap : w.snapshots) {
    double expect = exact_cylinder_radius(1.0, 3, snap->t);
    CHECK(std::abs(mean_radius(snap->curve) - expect) / expect <= 1e-3);
  }
}

TEST_CASE("history_window: span exceeding run age flags partial") {
  StepperConfig cfg;
  FlowState st = make_state(make_periodic_cylinder(1.0, 4.0, cfg.spacing), 0.01);
  run_to(st, cfg, 0.002);
  HistoryWindow w = history_window(st, st.components[0], 0.01);
  CHECK(w.partial);
}

TEST_CASE("history_window: cadence consistency across strides") {
  // snapshots taken at denser cadence agree with coarser ones after evolving
  // the matched slice by the exact cylinder law
  auto window_for = [&](double span) {
    StepperConfig cfg;
    FlowState st = make_state(make_periodic_cylinder(1.0, 4.0, cfg.spacing), span);
    run_to(st, cfg, 0.04);
    return history_window(st, st.components[0], span);
  };
  HistoryWindow coarse = window_for(0.02);
  HistoryWindow fine = window_for(0.04);
  for (const auto& snap : coarse.snapshots) {
    double best_dt = 1e300;
    const Snapshot* match = nullptr;
    for (const auto& other : fine.snapshots) {
      double d = std::abs(other->t - snap->t);
      if (d < best_dt) {
        best_dt = d;
        match = other.get();
      }
    }
    REQUIRE(match != nullptr);
    double r0 = mean_radius(snap->curve);
    double r1 = exact_cylinder_radius(mean_radius(match->curve), 3, snap->t - match->t);
    CHECK(std::abs(r0 - r1) <= 2e-3);
  }
}

TEST_CASE("invariant: domain monotonicity under the flow") {
  StepperConfig cfg;
  cfg.spacing = 0.02;
  DumbbellSpec spec;
  spec.neck_length = 3.0;
  FlowState st = make_state(make_dumbbell(spec, cfg.spacing));
  ProfileCurve before = st.components[0].curve;
  run_to(st, cfg, 0.004);
  ProfileCurve mid = st.components[0].curve;
  run_to(st, cfg, 0.008);
  ProfileCurve after = st.components[0].curve;
  CHECK(containment_violation(mid, before) <= 2.0 * sq(cfg.spacing));
  CHECK(containment_violation(after, mid) <= 2.0 * sq(cfg.spacing));
}

TEST_CASE("invariant: parabolic rescaling equivariance of the trigger time") {
  auto trigger_time = [&](double lambda) {
    StepperConfig cfg;
    cfg.spacing = 0.02 * lambda;
    FlowState st = make_state(make_sphere(lambda, cfg.spacing));
    TriggerInfo info = advance_until_trigger(st, cfg, 10.0 / lambda, 10.0 * lambda * lambda);
    REQUIRE(info.triggered);
    return info.t;
  };
  double t1 = trigger_time(1.0);
  for (double lambda : {0.5, 2.0}) {
    double tl = trigger_time(lambda);
    CHECK(std::abs(tl - lambda * lambda * t1) <= 0.01 * lambda * lambda * t1);
  }
}

TEST_CASE("invariant: convexity preserved on convex initial data") {
  StepperConfig cfg;
  FlowState st = make_state(make_capsule(0.5, 2.0, cfg.spacing));
  for (int k = 0; k < 4; ++k) {
    run_to(st, cfg, st.t + 0.01);
    CurvatureField f = curvatures(st.components[0].curve);
    CHECK(min_lambda_axis(st.components[0].curve) >= -1e-6 * f.max_H());
  }
}

TEST_CASE("invariant: Andrews monitor on sphere and cylinder runs") {
  StepperConfig cfg;
  FlowState sph = make_state(make_sphere(1.0, cfg.spacing));
  for (int k = 0; k < 3; ++k) {
    run_to(sph, cfg, sph.t + 0.05);
    AndrewsReport rep = andrews_radii(sph.components[0].curve);
    CHECK(std::abs(rep.min_alpha_interior() - 2.0) <= 1e-3 * 2.0 + 2e-3);
  }
  FlowState cyl = make_state(make_periodic_cylinder(1.0, 4.0, cfg.spacing));
  for (int k = 0; k < 3; ++k) {
    run_to(cyl, cfg, cyl.t + 0.08);
    AndrewsReport rep = andrews_radii(cyl.components[0].curve);
    CHECK(std::abs(rep.min_alpha_interior() - 1.0) <= 1e-3 + 2e-3);
  }
}
