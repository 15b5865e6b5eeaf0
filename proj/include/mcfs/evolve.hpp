#pragma once

#include <deque>
#include <memory>

#include "mcfs/geometry.hpp"

namespace mcfs {

struct StepperConfig {
  double cfl = 0.35;              // safety factor, in (0, 0.5]
  double spacing = 0.02;          // base target arclength spacing
  double trigger_tol = 1e-3;      // relative tolerance for event localization
  int history_stride = 48;        // snapshots retained per history span
  double curvature_points = 20.0; // samples per curvature length 1/|A|
  double min_spacing = 1e-7;
  bool extrapolate = true;        // Richardson-extrapolated (second order) steps

  void validate() const {
    require(cfl > 0.0 && cfl <= 0.5, ErrorCode::bad_config, "cfl must lie in (0, 0.5]");
    require(trigger_tol > 0.0 && trigger_tol <= 1e-3, ErrorCode::bad_config,
            "trigger_tol must lie in (0, 1e-3]");
    require(spacing > 0.0 && min_spacing > 0.0, ErrorCode::bad_config, "spacings must be positive");
    require(history_stride >= 4, ErrorCode::bad_config, "history_stride too small");
    require(curvature_points >= 4.0, ErrorCode::bad_config, "curvature_points too small");
  }
};

struct Snapshot {
  double t = 0.0;
  ProfileCurve curve;
};

enum class ComponentStatus { Active, Discarded };

struct Component {
  int id = 0;
  int parent = -1;
  ProfileCurve curve;
  ComponentStatus status = ComponentStatus::Active;
  double target_spacing = 0.0;
  std::vector<std::shared_ptr<const Snapshot>> history;  // ordered by time
};

struct FlowState {
  double t = 0.0;
  std::vector<Component> components;
  int next_id = 1;
  double history_span = 1e-3;   // backward duration that must stay recorded
  double last_snapshot_t = -1e300;

  Component* find(int id) {
    for (auto& c : components)
      if (c.id == id) return &c;
    return nullptr;
  }
  const Component* find(int id) const {
    for (auto& c : components)
      if (c.id == id) return &c;
    return nullptr;
  }
  bool extinct() const { return components.empty(); }
};

struct TriggerInfo {
  bool triggered = false;
  double t = 0.0;
  double max_H = 0.0;
  std::vector<std::pair<int, size_t>> attaining;  // (component id, sample index)
};

// Exact self-similar solutions used as anchors throughout the tests.
inline double exact_sphere_radius(double R0, int N, double t) {
  return std::sqrt(std::max(R0 * R0 - 2.0 * static_cast<double>(N - 1) * t, 0.0));
}
inline double exact_cylinder_radius(double s0, int N, double t) {
  return std::sqrt(std::max(s0 * s0 - 2.0 * static_cast<double>(N - 2) * t, 0.0));
}

namespace detail {

// One semi-implicit step: the arclength second-derivative term is implicit
// (tridiagonal solve per coordinate), the rotational curvature term explicit.
// The parametrization relaxes toward uniform arclength through the tangential
// part of c_uu/|c_u|^2.
inline ProfileCurve semi_implicit_substep(const ProfileCurve& c, double dt) {
  const size_t n = c.size();
  const int N = c.ambient_dim;
  const bool closed = c.closed_param();
  const double P = (c.closure == Closure::Periodic) ? c.period : 0.0;

  // r system: I - dt D2 (arclength Laplacian), rotational source explicit.
  // x system: I - dt D2 - dt W D1; the rotational x-term (N-2) r_s x_s / r is
  // stiff near the poles (gain ~ 1/r), so x_s is treated implicitly.
  std::vector<double> lo_r(n, 0.0), di_r(n, 1.0), up_r(n, 0.0), rhs_r(n, 0.0);
  std::vector<double> lo_x(n, 0.0), di_x(n, 1.0), up_x(n, 0.0), rhs_x(n, 0.0);

  auto d = curve_derivatives(c);
  std::vector<double> seg(n);  // chord length i -> i+1
  for (size_t i = 0; i + 1 < n; ++i) seg[i] = dist(c.at(i), c.at(i + 1));
  seg[n - 1] = closed ? dist(c.at(n - 1), c.at_wrapped(static_cast<long>(n))) : 0.0;
  for (size_t i = 0; i < n; ++i) {
    bool pole = !closed && (i == 0 || i == n - 1);
    if (pole) {
      // pole moves along the axis: x_t = (N-1) x_ss with the even-symmetry
      // stencil x_ss = 2 (x_nb - x_0)/h^2; r stays 0
      double h = (i == 0) ? seg[0] : seg[n - 2];
      double k = dt * static_cast<double>(N - 1) * 2.0 / (h * h);
      di_x[i] = 1.0 + k;
      (i == 0 ? up_x[i] : lo_x[i]) = -k;
      rhs_x[i] = c.x[i];
      di_r[i] = 1.0;
      rhs_r[i] = 0.0;
      continue;
    }
    double hm = (i == 0) ? seg[n - 1] : seg[i - 1];
    double hp = seg[i];
    double denom = hm * hp * (hm + hp);
    double a2 = 2.0 * hp / denom, c2 = 2.0 * hm / denom;  // D2 weights (prev, next)
    double sp2 = sq(d[i].speed);
    double w = static_cast<double>(N - 2) * d[i].rp / (c.r[i] * sp2);
    double a1 = -hp * hp / denom, b1 = (hp * hp - hm * hm) / denom, c1 = hm * hm / denom;

    lo_r[i] = -dt * a2;
    di_r[i] = 1.0 + dt * (a2 + c2);
    up_r[i] = -dt * c2;
    rhs_r[i] = c.r[i] - dt * static_cast<double>(N - 2) * sq(d[i].xp) / (c.r[i] * sp2);

    lo_x[i] = -dt * (a2 + w * a1);
    di_x[i] = 1.0 + dt * (a2 + c2) - dt * w * b1;
    up_x[i] = -dt * (c2 + w * c1);
    rhs_x[i] = c.x[i];
  }

  ProfileCurve out = c;
  if (closed) {
    // wrap x_{-1} = x_{n-1} - P and x_n = x_0 + P: corner entries plus
    // constant shifts moved to the right-hand side
    double corner_lo_x = lo_x[0], corner_up_x = up_x[n - 1];
    double corner_lo_r = lo_r[0], corner_up_r = up_r[n - 1];
    rhs_x[0] += lo_x[0] * P;
    rhs_x[n - 1] -= up_x[n - 1] * P;
    lo_x[0] = up_x[n - 1] = 0.0;
    lo_r[0] = up_r[n - 1] = 0.0;
    solve_cyclic_tridiagonal(lo_x, di_x, up_x, corner_lo_x, corner_up_x, rhs_x);
    solve_cyclic_tridiagonal(lo_r, di_r, up_r, corner_lo_r, corner_up_r, rhs_r);
  } else {
    solve_tridiagonal(lo_x, di_x, up_x, rhs_x);
    solve_tridiagonal(lo_r, di_r, up_r, rhs_r);
  }
  out.x = std::move(rhs_x);
  out.r = std::move(rhs_r);
  if (!closed) {
    out.r.front() = 0.0;
    out.r.back() = 0.0;
  }
  return out;
}

inline void check_alive(const ProfileCurve& c) {
  const bool closed = c.closed_param();
  for (size_t i = 0; i < c.size(); ++i) {
    bool pole = !closed && (i == 0 || i == c.size() - 1);
    if (!pole && !(c.r[i] > 0.0))
      fail(ErrorCode::singularity_overrun,
           "radius hit zero away from the axis caps before the trigger fired; lower the trigger "
           "threshold gap or refine the resolution");
    require(std::isfinite(c.x[i]) && std::isfinite(c.r[i]), ErrorCode::singularity_overrun,
            "non-finite sample");
  }
}

inline ProfileCurve advance_curve(const ProfileCurve& c, double dt, bool extrapolate) {
  ProfileCurve full = semi_implicit_substep(c, dt);
  if (!extrapolate) {
    check_alive(full);
    return full;
  }
  ProfileCurve half = semi_implicit_substep(c, dt / 2.0);
  ProfileCurve two = semi_implicit_substep(half, dt / 2.0);
  ProfileCurve out = two;
  for (size_t i = 0; i < out.size(); ++i) {
    out.x[i] = 2.0 * two.x[i] - full.x[i];
    out.r[i] = 2.0 * two.r[i] - full.r[i];
  }
  if (out.closure == Closure::AxisCapped) {
    out.r.front() = 0.0;
    out.r.back() = 0.0;
  }
  check_alive(out);
  return out;
}

}  // namespace detail

inline double component_target_spacing(const Component& comp, const CurvatureField& f,
                                       const StepperConfig& cfg) {
  double maxA = max_abs_A(comp.curve, f);
  double h = std::min(cfg.spacing, 1.0 / (cfg.curvature_points * std::max(maxA, 1e-300)));
  h = std::max(h, cfg.min_spacing);
  h = std::min(h, comp.curve.total_length() / 8.0);
  return h;
}

// Resample a component toward its curvature-adapted target spacing when the
// sampling drifted out of band. Returns whether a resample happened.
inline bool retarget_component(Component& comp, const CurvatureField& f, const StepperConfig& cfg) {
  double h = component_target_spacing(comp, f, cfg);
  if (comp.target_spacing <= 0.0) comp.target_spacing = h;
  double hmin = 1e300, hmax = 0.0;
  for (size_t i = 0; i < comp.curve.segment_count(); ++i) {
    double l = comp.curve.segment_length(i);
    hmin = std::min(hmin, l);
    hmax = std::max(hmax, l);
  }
  bool drifted = h < 0.75 * comp.target_spacing || h > 1.4 * comp.target_spacing;
  bool band = hmin < 0.6 * comp.target_spacing || hmax > 1.6 * comp.target_spacing;
  if (drifted || band) {
    comp.curve = resample(comp.curve, h);
    comp.target_spacing = h;
    return true;
  }
  return false;
}

struct StateScales {
  double max_H = -1e300;
  double max_A = 0.0;
  double min_spacing = 1e300;  // finest current segment
  double min_target = 1e300;   // finest per-component target spacing
};

inline StateScales state_scales(const FlowState& state, const StepperConfig* cfg = nullptr) {
  StateScales s;
  for (const auto& comp : state.components) {
    if (comp.status != ComponentStatus::Active) continue;
    CurvatureField f = curvatures(comp.curve);
    s.max_H = std::max(s.max_H, f.max_H());
    s.max_A = std::max(s.max_A, max_abs_A(comp.curve, f));
    for (size_t i = 0; i < comp.curve.segment_count(); ++i)
      s.min_spacing = std::min(s.min_spacing, comp.curve.segment_length(i));
    double target = comp.target_spacing;
    if (target <= 0.0 && cfg != nullptr) target = component_target_spacing(comp, f, *cfg);
    if (target > 0.0) s.min_target = std::min(s.min_target, target);
  }
  if (s.min_target == 1e300) s.min_target = s.min_spacing;
  return s;
}

inline double max_H(const FlowState& state) { return state_scales(state).max_H; }

// The time-step cap cfl * min(spacing^2, 1/max|A|^2) uses the configured
// target spacing: the axial and near-pole advective terms are implicit, so
// finer-than-target grids (inherited after surgery) do not constrain dt.
inline double suggested_dt(const FlowState& state, const StepperConfig& cfg) {
  StateScales s = state_scales(state, &cfg);
  double dt = cfg.cfl * std::min(sq(s.min_target), 1.0 / std::max(sq(s.max_A), 1e-300));
  require(dt > 0.0 && std::isfinite(dt), ErrorCode::singularity_overrun, "vanishing time step");
  return dt;
}

inline void record_history(FlowState& state, bool force = false) {
  double cadence = state.history_span / 48.0;
  if (!force && state.t - state.last_snapshot_t < cadence) return;
  for (auto& comp : state.components) {
    if (comp.status != ComponentStatus::Active) continue;
    auto snap = std::make_shared<Snapshot>(Snapshot{state.t, comp.curve});
    comp.history.push_back(std::move(snap));
    double cutoff = state.t - 1.35 * state.history_span;
    while (comp.history.size() > 2 && comp.history.front()->t < cutoff)
      comp.history.erase(comp.history.begin());
  }
  state.last_snapshot_t = state.t;
}

// Advances all active components and returns the post-move scales; one
// curvature pass per component per step (plus one more when resampled).
inline StateScales step_core(FlowState& state, double dt, const StepperConfig& cfg) {
  StateScales out;
  for (auto& comp : state.components) {
    if (comp.status != ComponentStatus::Active) continue;
    comp.curve = detail::advance_curve(comp.curve, dt, cfg.extrapolate);
    CurvatureField f = curvatures(comp.curve);
    bool resampled = retarget_component(comp, f, cfg);
    if (resampled) f = curvatures(comp.curve);
    out.max_H = std::max(out.max_H, f.max_H());
    out.max_A = std::max(out.max_A, max_abs_A(comp.curve, f));
    double seg_lo = 1e300;
    for (size_t i = 0; i < comp.curve.segment_count(); ++i)
      seg_lo = std::min(seg_lo, comp.curve.segment_length(i));
    out.min_spacing = std::min(out.min_spacing, seg_lo);
    out.min_target = std::min(out.min_target, comp.target_spacing);
  }
  if (out.min_target == 1e300) out.min_target = out.min_spacing;
  state.t += dt;
  record_history(state);
  return out;
}

// Advance every active component by one time step of size dt.
// pre: dt <= cfl * min(spacing^2, 1/max|A|^2) over all components.
inline void step(FlowState& state, double dt, const StepperConfig& cfg) {
  cfg.validate();
  require(dt > 0.0, ErrorCode::bad_config, "dt must be positive");
  {
    StateScales s = state_scales(state, &cfg);
    double cap = cfg.cfl * std::min(sq(s.min_target), 1.0 / std::max(sq(s.max_A), 1e-300));
    require(dt <= cap * (1.0 + 1e-9), ErrorCode::bad_config,
            "dt exceeds cfl * min(spacing^2, 1/max|A|^2)");
  }
  if (state.components.empty()) {
    state.t += dt;
    return;
  }
  step_core(state, dt, cfg);
}

// Step until max H first reaches H_trig; the final step is bisected so that
// |max H - H_trig| / H_trig <= trigger_tol. Returns a no-trigger marker if
// T_max is reached first.
inline TriggerInfo advance_until_trigger(FlowState& state, const StepperConfig& cfg, double H_trig,
                                         double T_max) {
  cfg.validate();
  require(H_trig > 0.0, ErrorCode::bad_config, "H_trig must be positive");
  TriggerInfo info;

  auto fill_attaining = [&](TriggerInfo& out) {
    out.attaining.clear();
    for (const auto& comp : state.components) {
      if (comp.status != ComponentStatus::Active) continue;
      CurvatureField f = curvatures(comp.curve);
      for (size_t i = 0; i < comp.curve.size(); ++i)
        if (f.H[i] >= (1.0 - cfg.trigger_tol) * H_trig) out.attaining.emplace_back(comp.id, i);
    }
  };

  if (state.components.empty()) return info;
  record_history(state, state.last_snapshot_t < state.t);

  double mh = max_H(state);
  if (mh >= (1.0 - cfg.trigger_tol) * H_trig) {  // boundary case: immediate trigger
    info.triggered = true;
    info.t = state.t;
    info.max_H = mh;
    fill_attaining(info);
    return info;
  }

  StateScales scales = state_scales(state, &cfg);
  while (state.t < T_max) {
    double dt = cfg.cfl * std::min(sq(scales.min_target),
                                   1.0 / std::max(sq(scales.max_A), 1e-300));
    require(dt > 0.0 && std::isfinite(dt), ErrorCode::singularity_overrun, "vanishing time step");
    bool clipped = false;
    if (state.t + dt >= T_max) {
      dt = T_max - state.t;
      clipped = true;
    }
    if (dt <= 0.0) break;

    FlowState before = state;
    scales = step_core(state, dt, cfg);
    double mh_after = scales.max_H;
    if (mh_after < H_trig * (1.0 - cfg.trigger_tol)) {
      if (clipped) break;
      continue;
    }
    if (std::abs(mh_after - H_trig) <= cfg.trigger_tol * H_trig) {
      info.triggered = true;
      info.t = state.t;
      info.max_H = mh_after;
      fill_attaining(info);
      return info;
    }
    // bisect the crossing step
    double lo = 0.0, hi = dt;
    for (int it = 0; it < 80; ++it) {
      double mid = 0.5 * (lo + hi);
      state = before;
      double m = step_core(state, mid, cfg).max_H;
      if (std::abs(m - H_trig) <= cfg.trigger_tol * H_trig) {
        info.triggered = true;
        info.t = state.t;
        info.max_H = m;
        fill_attaining(info);
        return info;
      }
      (m > H_trig ? hi : lo) = mid;
    }
    fail(ErrorCode::singularity_overrun,
         "trigger bisection failed to localize max H = H_trig; refine the resolution");
  }
  info.triggered = false;
  info.t = state.t;
  info.max_H = max_H(state);
  return info;
}

struct HistoryWindow {
  std::vector<std::shared_ptr<const Snapshot>> snapshots;  // oldest first, includes current state
  bool partial = false;
};

// Snapshots covering [t - span, t]; flags a partial window when the recorded
// history does not reach back far enough (e.g. right after initialization or
// surgery), in which case neck candidates must be treated as unverified.
inline HistoryWindow history_window(const FlowState& state, const Component& comp, double span) {
  HistoryWindow w;
  double t0 = state.t - span;
  double earliest = 1e300;
  for (const auto& snap : comp.history) {
    earliest = std::min(earliest, snap->t);
    if (snap->t >= t0 - 1e-12 && snap->t <= state.t + 1e-12) w.snapshots.push_back(snap);
  }
  auto cur = std::make_shared<Snapshot>(Snapshot{state.t, comp.curve});
  if (w.snapshots.empty() || w.snapshots.back()->t < state.t - 1e-15) w.snapshots.push_back(cur);
  w.partial = comp.history.empty() || earliest > t0 + 1e-12;
  return w;
}

}  // namespace mcfs
