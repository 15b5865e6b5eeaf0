#pragma once

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "mcfs/common.hpp"

namespace mcfs {

// Closure of the generating curve in the (x,r) half-plane.
//   AxisCapped: r=0 exactly at both endpoints, domain of revolution is a ball-like solid.
//   Loop:       closed curve with r>0 everywhere (solid torus).
//   Periodic:   x-periodic profile with period `period` (cylinder with periodic ends).
enum class Closure { AxisCapped, Loop, Periodic };

inline const char* closure_name(Closure c) {
  switch (c) {
    case Closure::AxisCapped: return "axis_capped";
    case Closure::Loop: return "loop";
    case Closure::Periodic: return "periodic";
  }
  return "?";
}

inline Closure closure_from_name(const std::string& s) {
  if (s == "axis_capped") return Closure::AxisCapped;
  if (s == "loop") return Closure::Loop;
  if (s == "periodic") return Closure::Periodic;
  fail(ErrorCode::bad_config, "unknown closure '" + s + "'");
}

// Arclength-sampled generating curve of a hypersurface of revolution in R^N.
// Samples are ordered along the curve; for AxisCapped curves the first and last
// sample lie on the axis. Orientation convention: the solid domain lies to the
// right of the direction of travel, i.e. the outward normal is (-r', x').
struct ProfileCurve {
  std::vector<double> x;
  std::vector<double> r;
  Closure closure = Closure::AxisCapped;
  int ambient_dim = 3;
  double period = 0.0;  // x-advance per cycle, Periodic only

  size_t size() const { return x.size(); }
  bool empty() const { return x.empty(); }
  bool closed_param() const { return closure != Closure::AxisCapped; }

  Vec2 at(size_t i) const { return {x[i], r[i]}; }

  // Position of sample i (any integer) with wrap handling; for Periodic the
  // x coordinate is shifted by the period.
  Vec2 at_wrapped(long i) const {
    long n = static_cast<long>(size());
    if (closure == Closure::AxisCapped) {
      long k = std::clamp(i, 0L, n - 1);
      return {x[k], r[k]};
    }
    long k = ((i % n) + n) % n;
    double shift = (closure == Closure::Periodic) ? period * static_cast<double>((i - k) / n) : 0.0;
    return {x[k] + shift, r[k]};
  }

  double segment_length(size_t i) const {  // length of segment i -> i+1 (wrapped)
    return dist(at(i), at_wrapped(static_cast<long>(i) + 1));
  }

  size_t segment_count() const { return closed_param() ? size() : size() - 1; }

  double total_length() const {
    double L = 0.0;
    for (size_t i = 0; i < segment_count(); ++i) L += segment_length(i);
    return L;
  }

  // Cumulative arclength per sample, s[0]=0.
  std::vector<double> arclengths() const {
    std::vector<double> s(size(), 0.0);
    for (size_t i = 0; i + 1 < size(); ++i) s[i + 1] = s[i] + segment_length(i);
    return s;
  }

  std::pair<double, double> x_range() const {
    double lo = 1e300, hi = -1e300;
    for (double v : x) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return {lo, hi};
  }

  double max_radius() const {
    double m = 0.0;
    for (double v : r) m = std::max(m, v);
    return m;
  }

  // Diameter proxy of the revolved solid: diagonal of the (x, +-r) bounding box.
  double diameter() const {
    if (empty()) return 0.0;
    auto [lo, hi] = x_range();
    if (closure == Closure::Periodic) return std::hypot(period, 2.0 * max_radius());
    return std::hypot(hi - lo, 2.0 * max_radius());
  }

  void validate() const {
    if (empty()) return;
    if (size() < 8) fail(ErrorCode::too_coarse, "fewer than 8 samples");
    if (ambient_dim < 3) fail(ErrorCode::bad_config, "ambient dimension must be >= 3");
    const bool capped = closure == Closure::AxisCapped;
    if (capped && (r.front() != 0.0 || r.back() != 0.0))
      fail(ErrorCode::invalid_geometry, "axis_capped curve must have r=0 at both endpoints");
    if (closure == Closure::Periodic && period <= 0.0)
      fail(ErrorCode::bad_config, "periodic curve needs period > 0");
    const size_t n = size();
    for (size_t i = 0; i < n; ++i) {
      bool pole = capped && (i == 0 || i == n - 1);
      double rv = r[i];
      if (!(pole ? rv == 0.0 : rv > 0.0))
        fail(ErrorCode::invalid_geometry,
             (rv < 0.0 ? "negative radius at sample " : "sample on the axis at index ") +
                 std::to_string(i));
    }
    for (size_t i = 0; i + 1 < n; ++i) {
      if (!(x[i] != x[i + 1] || r[i] != r[i + 1]))
        fail(ErrorCode::invalid_geometry, "degenerate spacing at segment " + std::to_string(i));
    }
    if (closed_param() && x.back() == at_wrapped(static_cast<long>(n)).x &&
        r.back() == r.front() && closure == Closure::Loop && x.back() == x.front())
      fail(ErrorCode::invalid_geometry, "degenerate wrap segment");
  }
};

// ---------------------------------------------------------------------------
// Resampling

// Arclength-uniform resampling by monotone cubic interpolation of x(s), r(s).
// Closure is preserved; capped endpoints are kept exactly.
inline ProfileCurve resample(const ProfileCurve& curve, double target_spacing) {
  curve.validate();
  require(!curve.empty(), ErrorCode::invalid_geometry, "cannot resample an empty curve");
  require(target_spacing > 0.0, ErrorCode::bad_config, "target spacing must be positive");

  const bool closed = curve.closed_param();
  std::vector<double> s = curve.arclengths();
  double L = s.back();
  double wrap_len = 0.0;
  if (closed) {
    wrap_len = curve.segment_length(curve.size() - 1);
    L += wrap_len;
  }

  size_t n_new = std::max<size_t>(8, static_cast<size_t>(std::llround(L / target_spacing)) + (closed ? 0 : 1));

  const Vec2 wrap_next = closed ? curve.at_wrapped(static_cast<long>(curve.size())) : Vec2{};
  std::vector<double> mx = pchip_slopes(s, curve.x, closed, wrap_len, closed ? wrap_next.x - curve.x.back() : 0.0);
  std::vector<double> mr = pchip_slopes(s, curve.r, closed, wrap_len, closed ? wrap_next.r - curve.r.back() : 0.0);

  ProfileCurve out;
  out.closure = curve.closure;
  out.ambient_dim = curve.ambient_dim;
  out.period = curve.period;
  out.x.resize(n_new);
  out.r.resize(n_new);

  const double step = closed ? L / static_cast<double>(n_new) : L / static_cast<double>(n_new - 1);
  size_t seg = 0;
  for (size_t k = 0; k < n_new; ++k) {
    double sk = step * static_cast<double>(k);
    if (!closed && k == n_new - 1) sk = L;
    while (seg + 1 < curve.size() && s[seg + 1] < sk) ++seg;
    double s0 = s[seg], s1, x1, r1, m1x, m1r;
    if (seg + 1 < curve.size()) {
      s1 = s[seg + 1];
      x1 = curve.x[seg + 1];
      r1 = curve.r[seg + 1];
      m1x = mx[seg + 1];
      m1r = mr[seg + 1];
    } else {  // wrap segment of a closed curve
      s1 = s0 + wrap_len;
      x1 = wrap_next.x;
      r1 = wrap_next.r;
      m1x = mx[0];
      m1r = mr[0];
    }
    if (s1 <= s0) {
      out.x[k] = curve.x[seg];
      out.r[k] = curve.r[seg];
      continue;
    }
    out.x[k] = hermite_eval(sk, s0, s1, curve.x[seg], x1, mx[seg], m1x);
    out.r[k] = hermite_eval(sk, s0, s1, curve.r[seg], r1, mr[seg], m1r);
  }
  if (!closed) {
    out.x.front() = curve.x.front();
    out.r.front() = curve.r.front();
    out.x.back() = curve.x.back();
    out.r.back() = curve.r.back();
  }
  for (double& v : out.r) v = std::max(v, 0.0);
  if (out.closure == Closure::AxisCapped) {
    out.r.front() = 0.0;
    out.r.back() = 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Builders (all return curves sampled near `spacing`)

inline ProfileCurve make_sphere(double radius, double spacing, int N = 3) {
  ProfileCurve c;
  c.closure = Closure::AxisCapped;
  c.ambient_dim = N;
  size_t n = std::max<size_t>(16, static_cast<size_t>(std::llround(std::numbers::pi * radius / spacing)) + 1);
  for (size_t i = 0; i < n; ++i) {
    double th = std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1);
    c.x.push_back(-radius * std::cos(th));
    c.r.push_back(radius * std::sin(th));
  }
  c.r.front() = 0.0;
  c.r.back() = 0.0;
  return c;
}

inline ProfileCurve make_periodic_cylinder(double radius, double length, double spacing, int N = 3) {
  ProfileCurve c;
  c.closure = Closure::Periodic;
  c.ambient_dim = N;
  c.period = length;
  size_t n = std::max<size_t>(8, static_cast<size_t>(std::llround(length / spacing)));
  for (size_t i = 0; i < n; ++i) {
    c.x.push_back(length * static_cast<double>(i) / static_cast<double>(n));
    c.r.push_back(radius);
  }
  return c;
}

inline ProfileCurve make_torus(double major, double minor, double spacing, int N = 3) {
  require(major > minor && minor > 0.0, ErrorCode::bad_config, "torus needs major > minor > 0");
  ProfileCurve c;
  c.closure = Closure::Loop;
  c.ambient_dim = N;
  size_t n = std::max<size_t>(16, static_cast<size_t>(std::llround(2.0 * std::numbers::pi * minor / spacing)));
  // traversal starts at the outer equator moving in +x, which keeps the solid
  // tube on the right of travel and the normal (-r',x') outward
  for (size_t i = 0; i < n; ++i) {
    double th = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    c.x.push_back(minor * std::sin(th));
    c.r.push_back(major + minor * std::cos(th));
  }
  return c;
}

// Capsule: cylinder of given radius and axial length with hemispherical caps.
inline ProfileCurve make_capsule(double radius, double length, double spacing, int N = 3) {
  ProfileCurve c;
  c.closure = Closure::AxisCapped;
  c.ambient_dim = N;
  const double xl = -length / 2.0, xr = length / 2.0;
  size_t ncap = std::max<size_t>(8, static_cast<size_t>(std::llround(0.5 * std::numbers::pi * radius / spacing)));
  for (size_t i = 0; i <= ncap; ++i) {
    double th = 0.5 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(ncap);
    c.x.push_back(xl - radius * std::cos(th));
    c.r.push_back(radius * std::sin(th));
  }
  size_t nmid = std::max<size_t>(2, static_cast<size_t>(std::llround(length / spacing)));
  for (size_t i = 1; i < nmid; ++i) {
    c.x.push_back(xl + length * static_cast<double>(i) / static_cast<double>(nmid));
    c.r.push_back(radius);
  }
  for (size_t i = 0; i <= ncap; ++i) {
    double th = 0.5 * std::numbers::pi * (1.0 - static_cast<double>(i) / static_cast<double>(ncap));
    c.x.push_back(xr + radius * std::cos(th));
    c.r.push_back(radius * std::sin(th));
  }
  c.r.front() = 0.0;
  c.r.back() = 0.0;
  return resample(c, spacing);
}

namespace detail {

// Quintic Hermite with values / first / second derivatives prescribed at both ends.
inline double quintic_hermite(double t, double w, double v0, double s0, double c0, double v1,
                              double s1, double c1) {
  double z = t / w;
  double z2 = z * z, z3 = z2 * z, z4 = z3 * z, z5 = z4 * z;
  double h0 = 1 - 10 * z3 + 15 * z4 - 6 * z5;
  double h1 = z - 6 * z3 + 8 * z4 - 3 * z5;
  double h2 = 0.5 * z2 - 1.5 * z3 + 1.5 * z4 - 0.5 * z5;
  double g0 = 10 * z3 - 15 * z4 + 6 * z5;
  double g1 = -4 * z3 + 7 * z4 - 3 * z5;
  double g2 = 0.5 * z3 - z4 + 0.5 * z5;
  return v0 * h0 + s0 * w * h1 + c0 * w * w * h2 + v1 * g0 + s1 * w * g1 + c1 * w * w * g2;
}

}  // namespace detail

// Bulb-chain assembly shared by the dumbbell and multi-bulb builders.
// Bulbs are spheres at the given centers; adjacent bulbs are joined by a neck
// whose waist parabola meets the spheres through C^2 quintic ramps.
struct BulbChainSpec {
  std::vector<double> centers;
  std::vector<double> radii;       // per bulb
  std::vector<double> neck_radii;  // per gap (size = centers.size() - 1)
  double taper = 0.05;
  double ramp_fraction = 0.5;    // fraction of each neck half occupied by the ramp
  double junction_cos = 0.643;   // junction polar position on the sphere
};

inline ProfileCurve make_bulb_chain(const BulbChainSpec& spec, double spacing, int N) {
  require(spec.centers.size() >= 2 && spec.radii.size() == spec.centers.size() &&
              spec.neck_radii.size() + 1 == spec.centers.size(),
          ErrorCode::bad_config, "inconsistent bulb chain spec");
  const double jc = spec.junction_cos, jh = std::sqrt(1.0 - jc * jc);
  ProfileCurve c;
  c.closure = Closure::AxisCapped;
  c.ambient_dim = N;

  auto push = [&](double px, double pr) {
    if (!c.x.empty() && std::abs(px - c.x.back()) < 1e-14 && std::abs(pr - c.r.back()) < 1e-14) return;
    c.x.push_back(px);
    c.r.push_back(pr);
  };
  auto sphere_arc = [&](double cx, double R, double phi_from, double phi_to) {
    size_t n = std::max<size_t>(
        12, static_cast<size_t>(std::llround(std::abs(phi_to - phi_from) * R / spacing)));
    for (size_t i = 0; i <= n; ++i) {
      double phi = phi_from + (phi_to - phi_from) * static_cast<double>(i) / static_cast<double>(n);
      push(cx + R * std::cos(phi), R * std::sin(phi));
    }
  };

  const double phi_j = std::acos(jc);  // junction angle measured from +x
  for (size_t b = 0; b < spec.centers.size(); ++b) {
    double cx = spec.centers[b];
    double R = spec.radii[b];
    double phi_start = (b == 0) ? std::numbers::pi : std::numbers::pi - phi_j;
    double phi_end = (b + 1 == spec.centers.size()) ? 0.0 : phi_j;
    sphere_arc(cx, R, phi_start, phi_end);
    if (b + 1 == spec.centers.size()) break;

    // neck between bulb b and b+1
    double Rn = spec.radii[b + 1];
    double rn = spec.neck_radii[b];
    require(rn < R && rn < Rn, ErrorCode::bad_config, "neck thicker than a bulb");
    double cxn = spec.centers[b + 1];
    double xj0 = cx + jc * R;         // junction on the right of bulb b
    double xj1 = cxn - jc * Rn;       // junction on the left of bulb b+1
    double half = 0.5 * (xj1 - xj0);
    require(half > 0.0, ErrorCode::bad_config, "bulbs overlap");
    // ramp widths scale with the bulb on each side: the prescribed junction
    // curvature is ~1/R, and a wider ramp would make the quintic undershoot
    double ramp_l = std::min(spec.ramp_fraction * half, 1.1 * R);
    double ramp_r = std::min(spec.ramp_fraction * half, 1.1 * Rn);
    double base_lo = xj0 + ramp_l, base_hi = xj1 - ramp_r;
    double mid = 0.5 * (base_lo + base_hi);
    double base_half = 0.5 * (base_hi - base_lo);
    require(base_half > 0.0, ErrorCode::bad_config, "neck too short for its bulbs");
    auto base = [&](double xx) { return rn * (1.0 + spec.taper * sq((xx - mid) / base_half)); };
    auto base_d1 = [&](double xx) { return 2.0 * rn * spec.taper * (xx - mid) / sq(base_half); };
    double base_d2 = 2.0 * rn * spec.taper / sq(base_half);

    // descending ramp: junction -> waist parabola
    {
      double w = ramp_l;
      double slope = jc / jh, curv = -1.0 / (R * jh * jh * jh);
      size_t n = std::max<size_t>(12, static_cast<size_t>(std::llround(1.5 * w / spacing)));
      for (size_t i = 1; i <= n; ++i) {
        double t = w * static_cast<double>(i) / static_cast<double>(n);
        double v = detail::quintic_hermite(t, w, jh * R, -slope, curv, base(base_lo),
                                           base_d1(base_lo), base_d2);
        push(xj0 + t, v);
      }
    }
    // waist parabola
    {
      size_t n = std::max<size_t>(8, static_cast<size_t>(std::llround(2.0 * base_half / spacing)));
      for (size_t i = 1; i < n; ++i) {
        double xx = base_lo + 2.0 * base_half * static_cast<double>(i) / static_cast<double>(n);
        push(xx, base(xx));
      }
    }
    // ascending ramp: waist parabola -> next junction
    {
      double w = ramp_r;
      double slope = jc / jh, curv = -1.0 / (Rn * jh * jh * jh);
      size_t n = std::max<size_t>(12, static_cast<size_t>(std::llround(1.5 * w / spacing)));
      for (size_t i = 1; i <= n; ++i) {
        double t = w * static_cast<double>(i) / static_cast<double>(n);
        double v = detail::quintic_hermite(t, w, base(base_hi), base_d1(base_hi), base_d2, jh * Rn,
                                           slope, curv);
        push(base_hi + t, v);
      }
    }
  }
  c.r.front() = 0.0;
  c.r.back() = 0.0;
  return resample(c, spacing);
}

// Dumbbell: two bulbs of radius R joined by a neck of waist radius r_neck whose
// non-spherical region spans axial length L. A mild taper localizes the pinch
// at the center.
struct DumbbellSpec {
  double bulb_radius = 1.0;
  double neck_radius = 0.15;
  double neck_length = 4.0;
  double taper = 0.05;
  double ramp_fraction = 0.5;
};

inline ProfileCurve make_dumbbell(const DumbbellSpec& spec, double spacing, int N = 3) {
  require(spec.bulb_radius > spec.neck_radius && spec.neck_radius > 0.0 && spec.neck_length > 0.0,
          ErrorCode::bad_config, "dumbbell needs R > r_neck > 0, L > 0");
  BulbChainSpec chain;
  chain.taper = spec.taper;
  chain.ramp_fraction = spec.ramp_fraction;
  double cx = spec.neck_length / 2.0 + chain.junction_cos * spec.bulb_radius;
  chain.centers = {-cx, cx};
  chain.radii = {spec.bulb_radius, spec.bulb_radius};
  chain.neck_radii = {spec.neck_radius};
  return make_bulb_chain(chain, spacing, N);
}

// Chain of three bulbs joined by two necks (separating-collection scenarios).
// The middle bulb may have its own radius.
inline ProfileCurve make_three_bulb(double R_outer, double R_middle, double rn, double L,
                                    double spacing, int N = 3) {
  BulbChainSpec chain;
  double D = L + chain.junction_cos * (R_outer + R_middle);
  chain.centers = {-D, 0.0, D};
  chain.radii = {R_outer, R_middle, R_outer};
  chain.neck_radii = {rn, rn};
  return make_bulb_chain(chain, spacing, N);
}

// ---------------------------------------------------------------------------
// Serialization: CSV with header `x,r`, one sample per row; JSON sidecar with
// closure / ambient dimension / period.

inline void save_profile_csv(const ProfileCurve& c, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io_error, "cannot open " + path);
  out << "x,r\n";
  for (size_t i = 0; i < c.size(); ++i) out << fmt_double(c.x[i]) << "," << fmt_double(c.r[i]) << "\n";
}

inline std::string profile_meta_json(const ProfileCurve& c) {
  std::ostringstream os;
  os << "{\"closure\":\"" << closure_name(c.closure) << "\",\"ambient_dim\":" << c.ambient_dim
     << ",\"period\":" << fmt_double(c.period) << "}";
  return os.str();
}

inline ProfileCurve load_profile_csv(const std::string& path, Closure closure = Closure::AxisCapped,
                                     int N = 3, double period = 0.0) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io_error, "cannot open " + path);
  std::string line;
  std::getline(in, line);
  require(line.rfind("x,r", 0) == 0, ErrorCode::io_error, "bad profile CSV header in " + path);
  ProfileCurve c;
  c.closure = closure;
  c.ambient_dim = N;
  c.period = period;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    size_t comma = line.find(',');
    require(comma != std::string::npos, ErrorCode::io_error, "bad CSV row in " + path);
    c.x.push_back(std::stod(line.substr(0, comma)));
    c.r.push_back(std::stod(line.substr(comma + 1)));
  }
  return c;
}

}  // namespace mcfs
