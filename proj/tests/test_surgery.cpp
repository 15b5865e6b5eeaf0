#include <catch2/catch_amalgamated.hpp>

#include "mcfs/surgery.hpp"

using namespace mcfs;

namespace {

// exact shrinking-cylinder history pushed behind a periodic cylinder of
// radius r_now at time t_now
FlowState cylinder_state_with_history(double r_now, double length, double spacing, double span,
                                      int N = 3) {
  FlowState st;
  st.t = 1.0;
  st.history_span = span;
  Component comp;
  comp.id = 0;
  comp.curve = make_periodic_cylinder(r_now, length, spacing, N);
  comp.target_spacing = spacing;
  for (int k = 40; k >= 1; --k) {
    double tk = st.t - span * static_cast<double>(k) / 40.0 * 1.2;
    double rk = std::sqrt(r_now * r_now + 2.0 * static_cast<double>(N - 2) * (st.t - tk));
    comp.history.push_back(
        std::make_shared<Snapshot>(Snapshot{tk, make_periodic_cylinder(rk, length, spacing, N)}));
  }
  st.components.push_back(std::move(comp));
  st.next_id = 1;
  return st;
}

// independent brute-force neck quality: best-fit shrinking-cylinder C^2 fit
// over a (center, radius) grid using an evenly resampled axial window
double brute_force_neck_quality(const ProfileCurve& c, double s_nominal, double delta,
                                double x_center_hint) {
  double best = 1e300;
  for (int ic = -12; ic <= 12; ++ic) {
    double xc = x_center_hint + 0.2 * s_nominal * static_cast<double>(ic);
    for (int is = -10; is <= 10; ++is) {
      double s = s_nominal * (1.0 + 0.02 * static_cast<double>(is));
      double W = s_nominal / delta;
      const int m = 64;
      double dev = 0.0;
      bool ok = true;
      std::vector<double> rr(2 * m + 1);
      for (int k = -m; k <= m; ++k) {
        double xq = xc + W * static_cast<double>(k) / static_cast<double>(m);
        double r = detail::radius_at(c, xq, 3.0 * s_nominal);
        if (!(r == r)) {
          ok = false;
          break;
        }
        rr[static_cast<size_t>(k + m)] = r;
      }
      if (!ok) continue;
      double hx = W / static_cast<double>(m);
      for (int k = -m; k <= m; ++k) {
        size_t i = static_cast<size_t>(k + m);
        dev = std::max(dev, std::abs(rr[i] / s - 1.0));
        if (k > -m && k < m) {
          double d1 = (rr[i + 1] - rr[i - 1]) / (2.0 * hx);
          double d2 = (rr[i + 1] - 2.0 * rr[i] + rr[i - 1]) / (hx * hx);
          dev = std::max(dev, std::abs(d1));
          dev = std::max(dev, std::abs(d2) * s);
        }
      }
      best = std::min(best, dev);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("standard cap: coincides with the unit cylinder away from the tip") {
  StandardCapProfile cap = build_standard_cap(0.5, 0.1);
  CHECK(cap.cyl_start_x < 10.0);
  for (double xi : {10.0, 12.0, 50.0}) {
    CHECK(std::abs(cap.psi(xi) - 1.0) <= 1e-10);
    CHECK(std::abs(cap.psi(xi + 1e-4) - cap.psi(xi)) <= 1e-10);  // psi' = 0 there
  }
}

TEST_CASE("standard cap: convex everywhere") {
  StandardCapProfile cap = build_standard_cap(0.5, 0.1);
  ProfileCurve capsule = cap.as_capsule(20.0, cap.arc_length / 100.0);
  CurvatureField f = curvatures(capsule);
  for (size_t i = 0; i < capsule.size(); ++i) {
    CHECK(f.lambda_axis[i] >= -1e-8);
    CHECK(f.lambda_rot[i] >= -1e-8);
  }
}

TEST_CASE("standard cap: certified alpha_st matches the brute-force Andrews scan") {
  StandardCapProfile cap = build_standard_cap(0.5, 0.1);
  CHECK(cap.alpha_st > 0.5);
  CHECK(cap.beta_st > 0.1);
  // independent scan at a different resolution
  ProfileCurve capsule = cap.as_capsule(30.0, cap.arc_length / 220.0);
  AndrewsReport rep = andrews_radii(capsule);
  CHECK(std::abs(rep.min_alpha_interior() - cap.alpha_st) <= 0.02 * cap.alpha_st);
}

TEST_CASE("standard cap: rejects out-of-range certification targets") {
  CHECK_THROWS_AS(build_standard_cap(1.0, 0.1, 3), Error);   // alpha must be < N-2
  CHECK_THROWS_AS(build_standard_cap(0.5, 1.0, 3), Error);   // beta must be < 1/(N-2)
  CHECK_THROWS_AS(build_standard_cap(-0.1, 0.1, 3), Error);
}

TEST_CASE("standard cap: total area self-converges under refinement") {
  StandardCapProfile cap = build_standard_cap(0.5, 0.1);
  ProfileCurve coarse = cap.as_capsule(10.0, cap.arc_length / 60.0);
  ProfileCurve fine = cap.as_capsule(10.0, cap.arc_length / 240.0);
  double a0 = lateral_area(coarse).value;
  double a1 = lateral_area(fine).value;
  CHECK(std::abs(a0 - a1) / a1 <= 1e-4);
}

TEST_CASE("detect_strong_necks: exact cylinder yields one strong candidate family") {
  double spacing = 0.05;
  FlowState st = cylinder_state_with_history(1.0, 48.0, spacing, 2.2);
  auto cands = detect_strong_necks(st, 1.0, 0.05, 2.0);
  REQUIRE(cands.size() == 1);
  CHECK(cands[0].strong);
  CHECK(cands[0].delta_meas <= 2.0 * sq(spacing));
  CHECK(std::abs(cands[0].s - 1.0) <= 1e-6);
}

TEST_CASE("detect_strong_necks: round sphere has no necks") {
  FlowState st;
  st.t = 0.0;
  st.history_span = 1.0;
  Component comp;
  comp.id = 0;
  comp.curve = make_sphere(1.0, 0.01);
  st.components.push_back(std::move(comp));
  for (double delta : {0.05, 0.1}) {
    auto cands = detect_strong_necks(st, 2.0, delta, 2.0);
    CHECK(cands.empty());
  }
}

TEST_CASE("detect_strong_necks: partial history yields non-strong candidates") {
  double spacing = 0.05;
  FlowState st = cylinder_state_with_history(1.0, 48.0, spacing, 2.2);
  st.components[0].history.clear();
  auto cands = detect_strong_necks(st, 1.0, 0.05, 2.0);
  REQUIRE(cands.size() == 1);
  CHECK_FALSE(cands[0].strong);
  CHECK(cands[0].history_partial);
}

TEST_CASE("detect_strong_necks: dumbbell at trigger matches the brute-force cylinder fit") {
  StepperConfig cfg;
  cfg.spacing = 0.025;
  cfg.curvature_points = 10.0;
  DumbbellSpec spec;  // bulbs 1.0, waist 0.15, L=4
  FlowState st;
  Component comp;
  comp.id = 0;
  comp.curve = make_dumbbell(spec, cfg.spacing);
  st.components.push_back(std::move(comp));
  st.history_span = 2.0 * sq(0.025) * 1.3;
  TriggerInfo info = advance_until_trigger(st, cfg, 400.0, 1.0);
  REQUIRE(info.triggered);

  const double H_neck = 40.0, delta = 0.3;
  auto cands = detect_strong_necks(st, H_neck, delta, 2.0);
  REQUIRE(cands.size() >= 2);  // one neck on each side of the waist
  for (const auto& cand : cands) {
    CHECK(cand.strong);
    double oracle = brute_force_neck_quality(st.components[0].curve, cand.s, delta, cand.center_x);
    CHECK(std::abs(cand.delta_profile - oracle) <= 0.10 * std::max(oracle, cand.delta_profile));
  }
}

TEST_CASE("minimal_separating_collection: staged dumbbell with one neck selects exactly it") {
  // small hot bulb - neck - large thick bulb
  BulbChainSpec chain;
  chain.centers = {0.0, 2.6};
  chain.radii = {0.3, 1.0};   // H ~ 6.7 at the small bulb attains the trigger
  chain.neck_radii = {0.2};   // H ~ 5 on the neck stays unlabeled
  FlowState st;
  st.t = 0.0;
  Component comp;
  comp.id = 7;
  comp.curve = make_bulb_chain(chain, 0.01, 3);
  st.components.push_back(std::move(comp));
  // short smoothing run: hand-built junction transients decay and H becomes
  // monotone from the hot bulb through the neck to the thick bulb
  StepperConfig scfg;
  scfg.spacing = 0.01;
  while (st.t < 0.01) step(st, std::min(suggested_dt(st, scfg), 0.01 - st.t), scfg);

  CurvatureField f = curvatures(st.components[0].curve);
  double H_trig = f.max_H();       // the small bulb attains the trigger
  double H_th = 2.5;               // the large bulb is thick
  double s_neck = 1.0 / curvatures(st.components[0].curve).max_H();
  (void)s_neck;
  double r_neck_now = exact_cylinder_radius(0.2, 3, st.t);
  auto cands = detect_strong_necks(st, 1.0 / r_neck_now, 0.45, 2.0);
  REQUIRE_FALSE(cands.empty());
  for (auto& cand : cands) cand.strong = true;  // staged: history not simulated here
  auto sel = minimal_separating_collection(st, cands, H_trig, H_th);
  REQUIRE(sel.size() == 1);
  CHECK(sel[0].component_id == 7);
}

TEST_CASE("minimal_separating_collection: no thick region means empty collection") {
  FlowState st;
  st.t = 0.0;
  Component comp;
  comp.id = 1;
  comp.curve = make_sphere(0.2, 0.004);  // H = 10 everywhere
  st.components.push_back(std::move(comp));
  auto sel = minimal_separating_collection(st, {}, 10.0, 4.0);
  CHECK(sel.empty());
}

TEST_CASE("minimal_separating_collection: three-bulb chain needs exactly two necks") {
  FlowState st;
  st.t = 0.0;
  Component comp;
  comp.id = 3;
  comp.curve = make_three_bulb(1.0, 0.3, 0.2, 2.6, 0.008);
  st.components.push_back(std::move(comp));
  StepperConfig scfg;
  scfg.spacing = 0.008;
  while (st.t < 0.01) step(st, std::min(suggested_dt(st, scfg), 0.01 - st.t), scfg);
  CurvatureField f = curvatures(st.components[0].curve);
  double H_trig = f.max_H();  // middle bulb
  double H_th = 2.5;          // outer bulbs
  double r_neck_now = exact_cylinder_radius(0.2, 3, st.t);
  auto cands = detect_strong_necks(st, 1.0 / r_neck_now, 0.45, 2.0);
  REQUIRE(cands.size() >= 2);
  for (auto& cand : cands) cand.strong = true;
  auto sel = minimal_separating_collection(st, cands, H_trig, H_th);
  REQUIRE(sel.size() == 2);
  CHECK(sel[0].center_x < 0.0);
  CHECK(sel[1].center_x > 0.0);

  // brute-force subset oracle: the minimum separating cardinality matches
  {
    std::vector<detail::LabelBlock> blocks = detail::label_blocks(f, H_trig, H_th, 1e-3);
    auto separates = [&](const std::vector<const NeckCandidate*>& picks) {
      for (size_t k = 0; k + 1 < blocks.size(); ++k) {
        if (blocks[k].trigger == blocks[k + 1].trigger) continue;
        bool covered = false;
        for (const auto* p : picks)
          covered |= p->idx_lo > blocks[k].hi && p->idx_hi < blocks[k + 1].lo;
        if (!covered) return false;
      }
      return true;
    };
    size_t n = cands.size();
    REQUIRE(n <= 12);
    size_t best_card = 99;
    for (size_t mask = 1; mask < (1u << n); ++mask) {
      std::vector<const NeckCandidate*> picks;
      for (size_t i = 0; i < n; ++i)
        if (mask & (1u << i)) picks.push_back(&cands[i]);
      if (separates(picks)) best_card = std::min(best_card, picks.size());
    }
    CHECK(best_card == sel.size());
  }
}

TEST_CASE("replace_neck_with_caps: surgery on the exact unit cylinder") {
  double spacing = 0.04;
  FlowState st = cylinder_state_with_history(1.0, 260.0, spacing, 2.2);
  auto cands = detect_strong_necks(st, 1.0, 0.05, 2.0);
  REQUIRE(cands.size() == 1);
  REQUIRE(cands[0].strong);

  ProfileCurve before = st.components[0].curve;
  StandardCapProfile cap = build_standard_cap(0.5, 0.1);
  SurgeryParams sp;
  SurgeryEvent ev = replace_neck_with_caps(st, cands[0], cap, sp, 0.05);

  // locality and modified interval
  CHECK(ev.modified_hi - ev.modified_lo <= 2.0 * 5.0 * sp.Gamma * ev.s);
  CHECK(ev.modified_lo >= ev.center_x - 5.0 * sp.Gamma * ev.s);
  CHECK(ev.modified_hi <= ev.center_x + 5.0 * sp.Gamma * ev.s);

  // post-surgery region is delta'-close to the exact scaled cap pair, up to
  // the resampling noise floor of the rebuilt profile
  CHECK(ev.cap_pair_deviation <= 10.0 * ev.delta_meas + 2.0 * sq(0.04 / ev.s) + 1e-6);

  // area drop against an independent quadrature of the masked profile
  {
    double expected = 0.0;
    double ball_r = 5.0 * sp.Gamma * ev.s;
    int M = 400000;
    double lo = ev.center_x - ball_r, hi = ev.center_x + ball_r;
    for (int k = 0; k < M; ++k) {
      double x = lo + (hi - lo) * (static_cast<double>(k) + 0.5) / static_cast<double>(M);
      double xi = std::abs(x - ev.center_x) / ev.s;
      if (xi < sp.Gamma) continue;
      double mask = cap.psi(xi - sp.Gamma) *
                    (1.0 - ev.bend_epsilon * detail::bend_bump((xi - sp.Gamma) / cap.cyl_start_x));
      double r = 1.0 * mask;
      double slope_xi = (cap.psi(xi - sp.Gamma + 1e-5) - cap.psi(xi - sp.Gamma - 1e-5)) / 2e-5;
      double ds = std::hypot(1.0, slope_xi);
      if (std::hypot(x - ev.center_x, r - ev.center_r) > ball_r) continue;
      expected += 2.0 * std::numbers::pi * r * ds * (hi - lo) / static_cast<double>(M);
    }
    CHECK(ev.area_after / ev.area_before < 1.0);
    CHECK(ev.area_after <= sp.omega * ev.area_before);
    CHECK(std::abs(ev.area_after - expected) / expected <= 2e-3);
  }

  // inward containment of every post-surgery piece
  for (const auto& comp : st.components) {
    CHECK(containment_violation(comp.curve, before) <= 1e-9);
  }
  // cutting a periodic cylinder once leaves a single capped component
  CHECK(st.components.size() == 1);
  CHECK(st.components[0].curve.closure == Closure::AxisCapped);
}

TEST_CASE("discard_components: sphere at trigger discards whole as a ball") {
  FlowState st;
  st.t = 0.24;
  Component comp;
  comp.id = 4;
  comp.curve = make_sphere(0.2, 0.004);  // H = 10 > H_th = 1
  st.components.push_back(std::move(comp));
  auto records = discard_components(st, 1.0);
  REQUIRE(records.size() == 1);
  CHECK(records[0].topo == TopologyClass::Ball);
  CHECK(records[0].component_id == 4);
  CHECK(st.extinct());
}

TEST_CASE("discard_components: shrinking torus discards as a solid torus") {
  FlowState st;
  st.t = 0.0;
  Component comp;
  comp.id = 9;
  comp.curve = make_torus(1.0, 0.25, 0.005);  // tube H ~ 1/0.25 > H_th
  st.components.push_back(std::move(comp));
  auto records = discard_components(st, 2.0);
  REQUIRE(records.size() == 1);
  CHECK(records[0].topo == TopologyClass::SolidTorus);
}

TEST_CASE("discard_components: components at or below H_th are retained") {
  FlowState st;
  st.t = 0.0;
  Component a, b;
  a.id = 1;
  a.curve = make_sphere(1.0, 0.01);  // H = 2
  b.id = 2;
  b.curve = make_sphere(0.1, 0.002);  // H = 20
  st.components.push_back(std::move(a));
  st.components.push_back(std::move(b));
  auto records = discard_components(st, 5.0);
  REQUIRE(records.size() == 1);
  CHECK(records[0].component_id == 2);
  REQUIRE(st.components.size() == 1);
  CHECK(st.components[0].id == 1);
}
