#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcfs {

enum class ErrorCode {
  invalid_geometry,
  not_mean_convex,
  too_coarse,
  singularity_overrun,
  insufficient_history,
  no_separating_neck,
  surgery_failed,
  cap_unsuitable,
  invariant_violation,
  domain_too_small,
  invalid_comparison,
  catalog_build,
  bad_config,
  io_error,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_geometry: return "invalid-geometry";
    case ErrorCode::not_mean_convex: return "not-mean-convex";
    case ErrorCode::too_coarse: return "too-coarse";
    case ErrorCode::singularity_overrun: return "singularity-overrun";
    case ErrorCode::insufficient_history: return "insufficient-history";
    case ErrorCode::no_separating_neck: return "no-separating-neck";
    case ErrorCode::surgery_failed: return "surgery-failed";
    case ErrorCode::cap_unsuitable: return "cap-unsuitable";
    case ErrorCode::invariant_violation: return "invariant-violation";
    case ErrorCode::domain_too_small: return "domain-too-small";
    case ErrorCode::invalid_comparison: return "invalid-comparison";
    case ErrorCode::catalog_build: return "catalog-build";
    case ErrorCode::bad_config: return "bad-config";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

struct Vec2 {
  double x = 0.0;
  double r = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.r + b.r}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.r - b.r}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.r}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.r * b.r; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.r); }
inline double dist(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.r - b.r); }

// Quintic smoothstep: S(0)=0, S(1)=1, S'=S''=0 at both ends.
inline double smoothstep5(double z) {
  z = std::clamp(z, 0.0, 1.0);
  return z * z * z * (10.0 + z * (-15.0 + 6.0 * z));
}

inline double sq(double v) { return v * v; }

// Distance from a point to a segment.
inline double dist_point_segment(Vec2 p, Vec2 a, Vec2 b) {
  Vec2 ab = b - a;
  double len2 = dot(ab, ab);
  if (len2 <= 0.0) return dist(p, a);
  double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return dist(p, a + t * ab);
}

// Thomas algorithm for a tridiagonal system; diag/off arrays of size n.
// lower[0] and upper[n-1] are ignored.
inline void solve_tridiagonal(std::vector<double>& lower, std::vector<double>& diag,
                              std::vector<double>& upper, std::vector<double>& rhs) {
  const size_t n = diag.size();
  for (size_t i = 1; i < n; ++i) {
    double w = lower[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

// Cyclic tridiagonal solve (Sherman-Morrison). corner_lo = A[0][n-1], corner_up = A[n-1][0].
inline void solve_cyclic_tridiagonal(const std::vector<double>& lower, const std::vector<double>& diag,
                                     const std::vector<double>& upper, double corner_lo, double corner_up,
                                     std::vector<double>& rhs) {
  const size_t n = diag.size();
  if (n == 1) {
    rhs[0] /= (diag[0] + corner_lo + corner_up);
    return;
  }
  const double gamma = -diag[0];
  std::vector<double> d(diag), lo(lower), up(upper), u(n, 0.0);
  d[0] -= gamma;
  d[n - 1] -= corner_lo * corner_up / gamma;
  u[0] = gamma;
  u[n - 1] = corner_up;
  std::vector<double> d2(d), lo2(lo), up2(up);
  solve_tridiagonal(lo, d, up, rhs);
  solve_tridiagonal(lo2, d2, up2, u);
  double factor = (rhs[0] + corner_lo * rhs[n - 1] / gamma) /
                  (1.0 + u[0] + corner_lo * u[n - 1] / gamma);
  for (size_t i = 0; i < n; ++i) rhs[i] -= factor * u[i];
}

// Monotone cubic slopes for data y over strictly increasing t: fourth-order
// polynomial slope estimates filtered by a Hyman-style monotonicity limiter.
// On monotone runs the limiter enforces the Fritsch-Carlson box; at smooth
// extrema the unlimited slope is kept, which preserves O(h^4) accuracy there.
// For closed data (periodic_delta_wrap) the sequence continues across the end
// with parameter advance wrap_dt and value jump wrap_dy per cycle.
inline std::vector<double> pchip_slopes(const std::vector<double>& t, const std::vector<double>& y,
                                        bool periodic_delta_wrap = false, double wrap_dt = 0.0,
                                        double wrap_dy = 0.0) {
  const long n = static_cast<long>(t.size());
  std::vector<double> m(n, 0.0);
  if (n == 1) return m;
  const double t_cycle = periodic_delta_wrap ? (t[n - 1] + wrap_dt - t[0]) : 0.0;
  const double y_cycle = periodic_delta_wrap ? (y[n - 1] + wrap_dy - y[0]) : 0.0;
  auto ext_t = [&](long i) {
    if (i >= 0 && i < n) return t[i];
    long k = ((i % n) + n) % n;
    return t[k] + t_cycle * static_cast<double>((i - k) / n);
  };
  auto ext_y = [&](long i) {
    if (i >= 0 && i < n) return y[i];
    long k = ((i % n) + n) % n;
    return y[k] + y_cycle * static_cast<double>((i - k) / n);
  };

  for (long i = 0; i < n; ++i) {
    // choose a 5-point stencil around i (clamped at open ends)
    long lo = i - 2, hi = i + 2;
    if (!periodic_delta_wrap) {
      lo = std::max(0L, std::min(i - 2, n - 5));
      hi = std::min(n - 1, lo + 4);
      lo = std::max(0L, hi - 4);
    }
    // derivative of the Lagrange interpolant at t_i
    double ti = t[i], acc = 0.0;
    for (long j = lo; j <= hi; ++j) {
      if (j == i) continue;
      double w = 1.0;
      for (long k = lo; k <= hi; ++k) {
        if (k == j || k == i) continue;
        w *= (ti - ext_t(k)) / (ext_t(j) - ext_t(k));
      }
      w /= (ext_t(j) - ti);
      acc += w * (ext_y(j) - ext_y(i));
    }
    m[i] = acc;

    // limiter
    bool has_dm = periodic_delta_wrap || i > 0;
    bool has_dp = periodic_delta_wrap || i < n - 1;
    double dm = has_dm ? (ext_y(i) - ext_y(i - 1)) / (ext_t(i) - ext_t(i - 1)) : 0.0;
    double dp = has_dp ? (ext_y(i + 1) - ext_y(i)) / (ext_t(i + 1) - ext_t(i)) : 0.0;
    if (has_dm && has_dp) {
      if (dm * dp > 0.0) {
        double s = dm > 0.0 ? 1.0 : -1.0;
        double cap = 3.0 * std::min(std::abs(dm), std::abs(dp));
        m[i] = s * std::clamp(s * m[i], 0.0, cap);
      } else {
        double cap = 3.0 * std::max(std::abs(dm), std::abs(dp));
        m[i] = std::clamp(m[i], -cap, cap);
      }
    } else {
      double d = has_dm ? dm : dp;
      if (m[i] * d < 0.0) m[i] = 0.0;
      else if (std::abs(m[i]) > 3.0 * std::abs(d)) m[i] = 3.0 * d;
    }
  }
  return m;
}

// Hermite evaluation on interval [t0,t1] given endpoint values/slopes.
inline double hermite_eval(double t, double t0, double t1, double y0, double y1, double m0, double m1) {
  double h = t1 - t0, z = (t - t0) / h;
  double z2 = z * z, z3 = z2 * z;
  return y0 * (2 * z3 - 3 * z2 + 1) + h * m0 * (z3 - 2 * z2 + z) + y1 * (-2 * z3 + 3 * z2) +
         h * m1 * (z3 - z2);
}

// %.17g formatting: shortest round-trip-exact output used by all writers so
// that identical runs produce byte-identical logs.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace mcfs
