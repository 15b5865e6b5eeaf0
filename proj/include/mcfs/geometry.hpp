#pragma once

#include <limits>
#include <queue>

#include "mcfs/profile_curve.hpp"

namespace mcfs {

// Pointwise curvature data of the revolved hypersurface. lambda_rot carries
// multiplicity N-2 among the principal curvatures.
struct CurvatureField {
  std::vector<double> lambda_axis;
  std::vector<double> lambda_rot;
  std::vector<double> H;
  std::vector<double> two_convexity;  // (lambda_1 + lambda_2) / H

  double max_H() const {
    double m = -1e300;
    for (double v : H) m = std::max(m, v);
    return m;
  }
  double min_H() const {
    double m = 1e300;
    for (double v : H) m = std::min(m, v);
    return m;
  }
};

namespace detail {

struct DiffSample {
  double xp, rp;    // first derivatives w.r.t. arclength
  double xpp, rpp;  // second derivatives
  double speed;     // |c'| (close to 1)
};

// Nonuniform centered differences from the sample triple (prev, cur, next).
inline DiffSample diff3(Vec2 prev, Vec2 cur, Vec2 next) {
  double hm = dist(prev, cur), hp = dist(cur, next);
  double denom = hm * hp * (hm + hp);
  DiffSample d;
  d.xp = (hm * hm * next.x + (hp * hp - hm * hm) * cur.x - hp * hp * prev.x) / denom;
  d.rp = (hm * hm * next.r + (hp * hp - hm * hm) * cur.r - hp * hp * prev.r) / denom;
  d.xpp = 2.0 * (hm * next.x - (hm + hp) * cur.x + hp * prev.x) / denom;
  d.rpp = 2.0 * (hm * next.r - (hm + hp) * cur.r + hp * prev.r) / denom;
  d.speed = std::hypot(d.xp, d.rp);
  return d;
}

}  // namespace detail

// First/second arclength derivatives at every sample; poles use even-symmetry
// ghosts across the axis.
inline std::vector<detail::DiffSample> curve_derivatives(const ProfileCurve& c) {
  const size_t n = c.size();
  std::vector<detail::DiffSample> out(n);
  const bool closed = c.closed_param();
  for (size_t i = 1; i + 1 < n; ++i)
    out[i] = detail::diff3(c.at(i - 1), c.at(i), c.at(i + 1));
  if (closed) {
    out[0] = detail::diff3(c.at_wrapped(-1), c.at(0), c.at(1));
    out[n - 1] = detail::diff3(c.at(n - 2), c.at(n - 1), c.at_wrapped(static_cast<long>(n)));
  } else {
    out[0] = detail::diff3({c.x[1], -c.r[1]}, c.at(0), c.at(1));  // axis ghost
    out[n - 1] = detail::diff3(c.at(n - 2), c.at(n - 1), {c.x[n - 2], -c.r[n - 2]});
  }
  return out;
}

// Outward unit normal (-r', x') at every sample.
inline std::vector<Vec2> curve_normals(const ProfileCurve& c) {
  auto d = curve_derivatives(c);
  std::vector<Vec2> nu(c.size());
  for (size_t i = 0; i < c.size(); ++i) nu[i] = {-d[i].rp / d[i].speed, d[i].xp / d[i].speed};
  return nu;
}

// Principal curvatures of the surface of revolution: lambda_axis is the signed
// curvature of the profile, lambda_rot = x'/(r |c'|) with multiplicity N-2.
// Pole values follow from the symmetry limit lambda_rot = lambda_axis.
inline CurvatureField curvatures(const ProfileCurve& c) {
  if (c.empty()) fail(ErrorCode::invalid_geometry, "empty curve");
  c.validate();
  const size_t n = c.size();
  const int N = c.ambient_dim;
  auto d = curve_derivatives(c);
  CurvatureField f;
  f.lambda_axis.resize(n);
  f.lambda_rot.resize(n);
  f.H.resize(n);
  f.two_convexity.resize(n);
  for (size_t i = 0; i < n; ++i) {
    double sp = d[i].speed;
    double la = (d[i].xpp * d[i].rp - d[i].rpp * d[i].xp) / (sp * sp * sp);
    double lr;
    bool pole = (c.closure == Closure::AxisCapped) && (i == 0 || i == n - 1);
    if (pole)
      lr = la;
    else
      lr = d[i].xp / (c.r[i] * sp);
    double H = la + static_cast<double>(N - 2) * lr;
    f.lambda_axis[i] = la;
    f.lambda_rot[i] = lr;
    f.H[i] = H;
    double sum2 = (N == 3) ? la + lr : (la <= lr ? la + lr : 2.0 * lr);
    f.two_convexity[i] = (H != 0.0) ? sum2 / H : 0.0;
  }
  return f;
}

inline double max_abs_A(const ProfileCurve& c, const CurvatureField& f) {
  double m = 0.0;
  for (size_t i = 0; i < c.size(); ++i)
    m = std::max(m, std::sqrt(sq(f.lambda_axis[i]) +
                              static_cast<double>(c.ambient_dim - 2) * sq(f.lambda_rot[i])));
  return m;
}

// ---------------------------------------------------------------------------
// Andrews tangent-ball radii

struct AndrewsReport {
  std::vector<double> r_interior;
  std::vector<double> r_exterior;
  std::vector<double> alpha_interior;
  std::vector<double> alpha_exterior;
  double sentinel = 0.0;  // cap applied to unbounded exterior balls

  double min_alpha_interior() const {
    double m = 1e300;
    for (double v : alpha_interior) m = std::min(m, v);
    return m;
  }
  double min_alpha_exterior() const {
    double m = 1e300;
    for (double v : alpha_exterior) m = std::min(m, v);
    return m;
  }
};

// Largest tangent-ball radii at the samples, computed in the half-plane against
// all profile points and their axis reflections (which realizes containment of
// the revolved ball in R^N). A tangent ball at p with center p -+ rho*nu stays
// on its side of the surface iff for every boundary point q:
//   rho <= |q-p|^2 / (2 <p-q, nu>)   whenever <p-q, nu> > 0.
// query_stride > 1 evaluates a subsample of tangency points (monitor use);
// skipped entries copy the nearest computed one. interior_only skips the
// exterior scan (whose large ball radii defeat the distance cutoff).
inline AndrewsReport andrews_radii(const ProfileCurve& c, const CurvatureField& f,
                                   size_t query_stride = 1, bool interior_only = false) {
  require(!c.empty(), ErrorCode::invalid_geometry, "empty curve");
  const size_t n = c.size();
  auto nrm = curve_normals(c);
  AndrewsReport rep;
  rep.sentinel = 1e6 * std::max(c.diameter(), 1e-300);
  rep.r_interior.assign(n, rep.sentinel);
  rep.r_exterior.assign(n, rep.sentinel);
  rep.alpha_interior.assign(n, 0.0);
  rep.alpha_exterior.assign(n, 0.0);

  const bool periodic = c.closure == Closure::Periodic;

  for (size_t i = 0; i < n; i += query_stride) {
    require(f.H[i] > 0.0, ErrorCode::not_mean_convex, "H <= 0 at sample " + std::to_string(i));
    const Vec2 p = c.at(i);
    const Vec2 nu = nrm[i];
    // an interior tangent ball forces every principal curvature below 1/rho,
    // so rho <= (N-1)/H; seeding with that bound keeps the scan local
    double best_int = std::min(rep.sentinel,
                               (static_cast<double>(c.ambient_dim - 1) + 1e-6) / f.H[i]);
    double best_ext = rep.sentinel;

    auto consider = [&](Vec2 q) {
      Vec2 pq = p - q;
      double d2 = dot(pq, pq);
      if (d2 <= 0.0) return;
      double along = dot(pq, nu);
      if (along > 0.0) {
        double rho = d2 / (2.0 * along);
        if (rho < best_int) best_int = rho;
      } else if (along < 0.0) {
        double rho = d2 / (-2.0 * along);
        if (rho < best_ext) best_ext = rho;
      }
    };

    // seed with nearby samples so the distance cutoff below bites early
    for (size_t k = 1; k <= std::min<size_t>(16, n - 1); ++k) {
      consider(c.at_wrapped(static_cast<long>(i) - static_cast<long>(k)));
      consider(c.at_wrapped(static_cast<long>(i) + static_cast<long>(k)));
    }
    consider({p.x, -p.r});  // own axis reflection

    const double cutoff_sq = [&] {
      double b = interior_only ? best_int : std::max(best_int, best_ext);
      return 4.0 * b * b;
    }();
    double cur_cutoff_sq = cutoff_sq;
    for (size_t j = 0; j < n; ++j) {
      if (j == i && !periodic) continue;
      for (int sh = periodic ? -1 : 0; sh <= (periodic ? 1 : 0); ++sh) {
        if (periodic && sh == 0 && j == i) continue;
        Vec2 q{c.x[j] + (periodic ? sh * c.period : 0.0), c.r[j]};
        double ddx = q.x - p.x;
        double dd1 = ddx * ddx + sq(q.r - p.r);
        if (dd1 < cur_cutoff_sq) consider(q);
        double dd2 = ddx * ddx + sq(q.r + p.r);
        if (dd2 < cur_cutoff_sq) consider({q.x, -q.r});
        if (!interior_only) {
          double b = std::max(best_int, best_ext);
          cur_cutoff_sq = 4.0 * b * b;
        } else {
          cur_cutoff_sq = 4.0 * best_int * best_int;
        }
      }
    }
    best_int = std::min(best_int, rep.sentinel);
    best_ext = std::min(best_ext, rep.sentinel);
    rep.r_interior[i] = best_int;
    rep.r_exterior[i] = best_ext;
    rep.alpha_interior[i] = f.H[i] * best_int;
    rep.alpha_exterior[i] = f.H[i] * best_ext;
  }
  if (query_stride > 1) {
    for (size_t i = 0; i < n; ++i) {
      size_t k = (i / query_stride) * query_stride;
      rep.r_interior[i] = rep.r_interior[k];
      rep.r_exterior[i] = rep.r_exterior[k];
      rep.alpha_interior[i] = rep.alpha_interior[k];
      rep.alpha_exterior[i] = rep.alpha_exterior[k];
    }
  }
  return rep;
}

inline AndrewsReport andrews_radii(const ProfileCurve& c, size_t query_stride = 1,
                                   bool interior_only = false) {
  return andrews_radii(c, curvatures(c), query_stride, interior_only);
}

// ---------------------------------------------------------------------------
// Areas

struct Window {
  enum class Kind { All, Axial, Ball } kind = Kind::All;
  double a = 0.0, b = 0.0;
  Vec2 center{};
  double radius = 0.0;

  static Window all() { return {}; }
  static Window axial(double a, double b) {
    Window w;
    w.kind = Kind::Axial;
    w.a = a;
    w.b = b;
    return w;
  }
  static Window ball(Vec2 c, double r) {
    Window w;
    w.kind = Kind::Ball;
    w.center = c;
    w.radius = r;
    return w;
  }
};

// Distance between the orbits of two half-plane points under revolution.
inline double revolved_dist(Vec2 a, Vec2 b) {
  return std::hypot(a.x - b.x, std::abs(a.r) - std::abs(b.r));
}

struct AreaResult {
  double value = 0.0;
  bool intersected = false;
};

inline double unit_sphere_area(int dim) {  // |S^dim|
  double d = static_cast<double>(dim);
  return 2.0 * std::pow(std::numbers::pi, 0.5 * (d + 1.0)) / std::tgamma(0.5 * (d + 1.0));
}

// Area of the revolved surface restricted to the window. The rotational area
// element is |S^{N-2}| r^{N-2} ds; the radial factor is integrated exactly for
// linear r so that disjoint windows add exactly.
inline AreaResult lateral_area(const ProfileCurve& c, const Window& w = Window::all()) {
  if (c.empty()) return {0.0, false};
  const int N = c.ambient_dim;
  const double omega = unit_sphere_area(N - 2);
  auto inside_metric = [&](Vec2 p) -> double {  // positive inside the window
    switch (w.kind) {
      case Window::Kind::All: return 1.0;
      case Window::Kind::Axial: return std::min(p.x - w.a, w.b - p.x);
      case Window::Kind::Ball: return w.radius - revolved_dist(p, w.center);
    }
    return 1.0;
  };
  auto radial_mean = [&](double r0, double r1) {
    int p = N - 2;
    if (p == 0) return 1.0;
    if (p == 1) return 0.5 * (r0 + r1);
    if (std::abs(r1 - r0) < 1e-14 * (std::abs(r0) + std::abs(r1) + 1e-30))
      return std::pow(0.5 * (r0 + r1), p);
    return (std::pow(r1, p + 1) - std::pow(r0, p + 1)) / (static_cast<double>(p + 1) * (r1 - r0));
  };
  double total = 0.0;
  bool any = false;
  for (size_t i = 0; i < c.segment_count(); ++i) {
    Vec2 a = c.at(i), b = c.at_wrapped(static_cast<long>(i) + 1);
    double fa = inside_metric(a), fb = inside_metric(b);
    if (fa <= 0.0 && fb <= 0.0) continue;
    double t0 = 0.0, t1 = 1.0;
    if (fa < 0.0) t0 = fa / (fa - fb);
    if (fb < 0.0) t1 = fa / (fa - fb);
    if (t1 <= t0) continue;
    any = true;
    double r0 = a.r + (b.r - a.r) * t0, r1 = a.r + (b.r - a.r) * t1;
    double len = dist(a, b) * (t1 - t0);
    total += omega * len * radial_mean(std::abs(r0), std::abs(r1));
  }
  return {total, any};
}

// ---------------------------------------------------------------------------
// Region representation of the revolved solid in the half-plane

class Region {
 public:
  Region() : empty_(true) {}
  explicit Region(const ProfileCurve& c) : curve_(c) {
    if (c.empty()) {
      empty_ = true;
      return;
    }
    periodic_ = (c.closure == Closure::Periodic);
  }

  bool empty() const { return empty_; }
  const ProfileCurve& curve() const { return curve_; }

  bool contains(Vec2 p) const {
    if (empty_) return false;
    double pr = std::abs(p.r);
    if (periodic_) {
      double x0 = curve_.x.front();
      double px = x0 + std::fmod(p.x - x0, curve_.period);
      if (px < x0) px += curve_.period;
      return pr <= radius_at_periodic(px);
    }
    const size_t n = curve_.size();
    const size_t m = curve_.closed_param() ? n : n - 1;
    int crossings = 0;
    for (size_t i = 0; i < m; ++i) {  // vertical ray cast downward from (p.x, pr)
      Vec2 a = curve_.at(i), b = curve_.at_wrapped(static_cast<long>(i) + 1);
      if ((a.x <= p.x) == (b.x <= p.x)) continue;
      double t = (p.x - a.x) / (b.x - a.x);
      double rc = a.r + (b.r - a.r) * t;
      if (rc < pr) ++crossings;
    }
    if (curve_.closure == Closure::AxisCapped) {
      double x0 = std::min(curve_.x.front(), curve_.x.back());
      double x1 = std::max(curve_.x.front(), curve_.x.back());
      if (pr == 0.0) return x0 <= p.x && p.x <= x1;
      if ((x0 <= p.x) != (x1 <= p.x)) ++crossings;  // axis closure edge at r=0
    }
    return (crossings % 2) == 1;
  }

  double boundary_distance(Vec2 p) const {
    if (empty_) return std::numeric_limits<double>::infinity();
    Vec2 q{p.x, std::abs(p.r)};
    double best = std::numeric_limits<double>::infinity();
    if (periodic_) {
      for (int sh = -1; sh <= 1; ++sh) {
        Vec2 qq{q.x + sh * curve_.period, q.r};
        for (size_t i = 0; i < curve_.segment_count(); ++i)
          best = std::min(best, dist_point_segment(qq, curve_.at(i),
                                                   curve_.at_wrapped(static_cast<long>(i) + 1)));
      }
      return best;
    }
    for (size_t i = 0; i < curve_.segment_count(); ++i)
      best = std::min(best,
                      dist_point_segment(q, curve_.at(i), curve_.at_wrapped(static_cast<long>(i) + 1)));
    return best;
  }

  double distance(Vec2 p) const { return contains(p) ? 0.0 : boundary_distance(p); }
  double signed_distance(Vec2 p) const {
    return contains(p) ? -boundary_distance(p) : boundary_distance(p);
  }

 private:
  double radius_at_periodic(double px) const {
    const size_t n = curve_.size();
    for (size_t i = 0; i < n; ++i) {
      double x0 = curve_.x[i];
      Vec2 b = curve_.at_wrapped(static_cast<long>(i) + 1);
      if (px >= x0 && px <= b.x) {
        double t = (b.x > x0) ? (px - x0) / (b.x - x0) : 0.0;
        return curve_.r[i] + (b.r - curve_.r[i]) * t;
      }
    }
    return curve_.r.back();
  }

  ProfileCurve curve_;
  bool empty_ = false;
  bool periodic_ = false;
};

namespace detail {

// Maximize a 1-Lipschitz f over a polyline by best-first edge refinement.
// Smooth maxima converge quadratically; flat plateaus (where the Lipschitz
// upper bound cannot tighten) are cut off by the evaluation budget, which
// still leaves the attained maximum second-order accurate.
template <class F>
inline double max_over_curve(const ProfileCurve& c, const F& f, double tol,
                             size_t eval_budget = 40000) {
  struct Edge {
    Vec2 u, v;
    double fu, fv;
    double ub;
    size_t seq;
    bool operator<(const Edge& o) const { return ub != o.ub ? ub < o.ub : seq > o.seq; }
  };
  double best = -1e300;
  std::vector<double> fv(c.size());
  for (size_t i = 0; i < c.size(); ++i) {
    fv[i] = f(c.at(i));
    best = std::max(best, fv[i]);
  }
  std::priority_queue<Edge> queue;
  size_t seq = 0;
  auto push = [&](Vec2 u, Vec2 v, double fu_, double fv_) {
    double ub = std::max(fu_, fv_) + 0.5 * dist(u, v);
    if (ub > best + tol) queue.push({u, v, fu_, fv_, ub, seq++});
  };
  for (size_t i = 0; i < c.segment_count(); ++i) {
    size_t j = (i + 1) % c.size();
    push(c.at(i), c.at_wrapped(static_cast<long>(i) + 1), fv[i], fv[j]);
  }
  size_t evals = 0;
  while (!queue.empty() && evals < eval_budget) {
    Edge e = queue.top();
    queue.pop();
    if (e.ub <= best + tol) break;
    Vec2 m = 0.5 * (e.u + e.v);
    double fm = f(m);
    ++evals;
    best = std::max(best, fm);
    push(e.u, m, e.fu, fm);
    push(m, e.v, fm, e.fv);
  }
  return best;
}

}  // namespace detail

// Symmetric Hausdorff distance between the revolved solid domains, computed in
// the half-plane on region representations. One empty side returns +infinity;
// two empty sides return 0.
inline double hausdorff_distance(const ProfileCurve& a, const ProfileCurve& b, double tol = 1e-12) {
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  Region ra(a), rb(b);
  double h1 = detail::max_over_curve(a, [&](Vec2 p) { return rb.distance(p); }, tol);
  double h2 = detail::max_over_curve(b, [&](Vec2 p) { return ra.distance(p); }, tol);
  return std::max(0.0, std::max(h1, h2));
}

// Max outward violation of `inner` within `outer`: sup over the inner boundary
// of the distance to the outer region (0 when nested).
inline double containment_violation(const ProfileCurve& inner, const ProfileCurve& outer,
                                    double tol = 1e-12) {
  if (inner.empty()) return 0.0;
  if (outer.empty()) return std::numeric_limits<double>::infinity();
  Region ro(outer);
  return std::max(0.0, detail::max_over_curve(inner, [&](Vec2 p) { return ro.distance(p); }, tol));
}

}  // namespace mcfs
