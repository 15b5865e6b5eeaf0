#pragma once

#include "mcfs/geometry.hpp"

namespace mcfs {

// Fixed convex cap profile at unit scale: starts at the tip on the axis with a
// vertical tangent, turns through pi/2 with curvature density kappa(z) =
// A (1-z^2)^3, and continues as the straight unit cylinder afterwards. The
// curvature vanishes to second order at the junction, so the assembled profile
// is C^2 and coincides with the unit cylinder beyond x = cyl_start_x (< 10).
struct StandardCapProfile {
  std::vector<double> arc_x;  // axial position, from the tip (arc_x[0] = 0)
  std::vector<double> arc_r;  // radius, arc_r[0] = 0, -> 1 at the junction
  double cyl_start_x = 0.0;   // psi == 1 exactly for xi >= cyl_start_x
  double arc_length = 0.0;    // arclength of the curved part
  double tip_curvature = 0.0;
  double alpha_st = 0.0;      // certified Andrews constant
  double beta_st = 0.0;       // certified 2-convexity constant

  // radius at axial distance xi from the tip (continues as the cylinder)
  double psi(double xi) const {
    if (xi <= 0.0) return 0.0;
    if (xi >= cyl_start_x) return 1.0;
    size_t lo = 0, hi = arc_x.size() - 1;
    while (hi - lo > 1) {
      size_t mid = (lo + hi) / 2;
      (arc_x[mid] <= xi ? lo : hi) = mid;
    }
    double t = (xi - arc_x[lo]) / (arc_x[hi] - arc_x[lo]);
    return arc_r[lo] + t * (arc_r[hi] - arc_r[lo]);
  }

  double max_H(int N) const { return static_cast<double>(N - 1) * tip_curvature; }

  // cap assembled as a finite capsule (cap + cylinder of given length + mirror
  // cap), used for certification scans and catalog runs
  ProfileCurve as_capsule(double cylinder_length, double spacing, int N = 3) const {
    ProfileCurve c;
    c.closure = Closure::AxisCapped;
    c.ambient_dim = N;
    double xr = cyl_start_x + cylinder_length;
    for (size_t i = 0; i < arc_x.size(); ++i) {
      c.x.push_back(arc_x[i]);
      c.r.push_back(arc_r[i]);
    }
    size_t nmid = std::max<size_t>(4, static_cast<size_t>(std::llround(cylinder_length / spacing)));
    for (size_t i = 1; i < nmid; ++i) {
      c.x.push_back(cyl_start_x + cylinder_length * static_cast<double>(i) / static_cast<double>(nmid));
      c.r.push_back(1.0);
    }
    for (size_t i = arc_x.size(); i-- > 0;) {
      c.x.push_back(xr + (cyl_start_x - arc_x[i]));
      c.r.push_back(arc_r[i]);
    }
    c.r.front() = 0.0;
    c.r.back() = 0.0;
    return resample(c, spacing);
  }
};

namespace detail {

// G(z) = int_0^z (1-u^2)^3 du, G(1) = 16/35
inline double cap_turning_integral(double z) {
  return z - z * z * z + 0.6 * std::pow(z, 5.0) - std::pow(z, 7.0) / 7.0;
}

}  // namespace detail

// Builds the cap profile and certifies alpha_st > alpha, beta_st > beta by an
// exhaustive sampled scan of the revolved capsule. Throws cap-unsuitable if
// the certification fails.
inline StandardCapProfile build_standard_cap(double alpha, double beta, int N = 3) {
  require(alpha > 0.0 && alpha < static_cast<double>(N - 2), ErrorCode::bad_config,
          "alpha outside (0, N-2)");
  require(beta > 0.0 && beta < 1.0 / static_cast<double>(N - 2), ErrorCode::bad_config,
          "beta outside (0, 1/(N-2))");

  StandardCapProfile cap;
  const double G1 = 16.0 / 35.0;
  const size_t n = 4000;

  // height normalization: r(s_end) = s_end * int_0^1 cos(phi(z)) dz = 1
  double c0 = 0.0;
  for (size_t i = 0; i < n; ++i) {  // midpoint rule, ample at this n
    double z = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    c0 += std::cos(0.5 * std::numbers::pi * detail::cap_turning_integral(z) / G1);
  }
  c0 /= static_cast<double>(n);
  const double s_end = 1.0 / c0;
  cap.arc_length = s_end;
  cap.tip_curvature = 0.5 * std::numbers::pi / (s_end * G1);

  cap.arc_x.resize(n + 1);
  cap.arc_r.resize(n + 1);
  cap.arc_x[0] = 0.0;
  cap.arc_r[0] = 0.0;
  double x = 0.0, r = 0.0;
  const double ds = s_end / static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) {  // trapezoid on the tangent field
    double z0 = static_cast<double>(i) / static_cast<double>(n);
    double z1 = static_cast<double>(i + 1) / static_cast<double>(n);
    double phi0 = 0.5 * std::numbers::pi * detail::cap_turning_integral(z0) / G1;
    double phi1 = 0.5 * std::numbers::pi * detail::cap_turning_integral(z1) / G1;
    double phim = 0.5 * std::numbers::pi *
                  detail::cap_turning_integral(0.5 * (z0 + z1)) / G1;
    x += ds * (std::sin(phi0) + 4.0 * std::sin(phim) + std::sin(phi1)) / 6.0;
    r += ds * (std::cos(phi0) + 4.0 * std::cos(phim) + std::cos(phi1)) / 6.0;
    cap.arc_x[i + 1] = x;
    cap.arc_r[i + 1] = r;
  }
  // land exactly on the unit cylinder
  double rescale = 1.0 / r;
  for (auto& v : cap.arc_x) v *= rescale;
  for (auto& v : cap.arc_r) v *= rescale;
  cap.arc_r.back() = 1.0;
  cap.cyl_start_x = cap.arc_x.back();
  cap.arc_length = s_end * rescale;
  cap.tip_curvature /= rescale;

  // certification scan on the revolved capsule
  ProfileCurve capsule = cap.as_capsule(30.0, cap.arc_length / 160.0, N);
  CurvatureField f = curvatures(capsule);
  double min_lambda = 1e300, min_ratio = 1e300;
  for (size_t i = 0; i < capsule.size(); ++i) {
    min_lambda = std::min(min_lambda, std::min(f.lambda_axis[i], f.lambda_rot[i]));
    min_ratio = std::min(min_ratio, f.two_convexity[i]);
  }
  AndrewsReport rep = andrews_radii(capsule, f);
  cap.alpha_st = rep.min_alpha_interior();
  cap.beta_st = min_ratio;
  require(min_lambda >= -1e-6, ErrorCode::cap_unsuitable, "cap lost convexity");
  require(cap.alpha_st > alpha, ErrorCode::cap_unsuitable,
          "certified alpha_st " + fmt_double(cap.alpha_st) + " does not exceed alpha");
  require(cap.beta_st > beta, ErrorCode::cap_unsuitable,
          "certified beta_st " + fmt_double(cap.beta_st) + " does not exceed beta");
  return cap;
}

}  // namespace mcfs
