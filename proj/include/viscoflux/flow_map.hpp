#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "viscoflux/errors.hpp"
#include "viscoflux/radial_solver.hpp"

namespace viscoflux {

namespace detail {

inline void require_increasing(const std::vector<double>& times) {
  if (times.size() < 2) throw ConfigError("velocity history needs at least two time levels", "history");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) throw ConfigError("velocity history times must be strictly increasing", "history");
  }
}

/// Index k with times[k] <= t <= times[k+1]; throws outside the span.
inline std::size_t time_bracket(const std::vector<double>& times, double t) {
  const double eps = 1e-12 * std::max(1.0, std::fabs(times.back()));
  if (t < times.front() - eps || t > times.back() + eps) {
    throw DomainError("velocity history: time " + std::to_string(t) + " outside [" +
                      std::to_string(times.front()) + ", " + std::to_string(times.back()) + "]");
  }
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t k = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
  return std::min(k, times.size() - 2);
}

} // namespace detail

/// Radial face velocities sampled at snapshot times. Linear in time and in r.
class RadialVelocityHistory {
public:
  using position_type = double;

  RadialVelocityHistory(RadialGrid grid, std::vector<double> times, std::vector<std::vector<double>> faces)
      : grid_(grid), times_(std::move(times)), faces_(std::move(faces)) {
    detail::require_increasing(times_);
    if (faces_.size() != times_.size()) throw ConfigError("velocity history: one face array per time", "history");
    for (const auto& f : faces_) {
      if (f.size() != grid_.n_cells + 1) throw ConfigError("velocity history: face array size mismatch", "history");
    }
  }

  static RadialVelocityHistory from_snapshots(const std::vector<RadialState>& snaps) {
    if (snaps.empty()) throw ConfigError("velocity history: no snapshots", "history");
    std::vector<double> t;
    std::vector<std::vector<double>> f;
    for (const auto& s : snaps) {
      t.push_back(s.t);
      f.push_back(s.v);
    }
    return {snaps.front().grid, std::move(t), std::move(f)};
  }

  const std::vector<double>& times() const { return times_; }
  const RadialGrid& grid() const { return grid_; }
  bool inside(double r) const { return r <= grid_.r_max; }
  double clamp(double r) const { return std::max(r, 0.0); }
  static double distance(double a, double b) { return std::fabs(b - a); }

  double velocity(double r, double t) const {
    const std::size_t k = detail::time_bracket(times_, t);
    const double w = std::clamp((t - times_[k]) / (times_[k + 1] - times_[k]), 0.0, 1.0);
    return (1.0 - w) * at(faces_[k], r) + w * at(faces_[k + 1], r);
  }

private:
  double at(const std::vector<double>& f, double r) const {
    if (r <= 0.0) return 0.0;
    const double x = r / grid_.dr();
    const auto n = static_cast<double>(grid_.n_cells);
    if (x >= n) return f.back();
    const auto k = static_cast<std::size_t>(x);
    const double w = x - static_cast<double>(k);
    return (1.0 - w) * f[k] + w * f[k + 1];
  }

  RadialGrid grid_;
  std::vector<double> times_;
  std::vector<std::vector<double>> faces_;
};

/// Closed-form radial field v(r, t) evaluated exactly; `times` only sets the step grid.
class AnalyticRadialHistory {
public:
  using position_type = double;

  AnalyticRadialHistory(std::function<double(double, double)> field, std::vector<double> times,
                        double r_max = std::numeric_limits<double>::infinity())
      : field_(std::move(field)), times_(std::move(times)), r_max_(r_max) {
    detail::require_increasing(times_);
  }

  static AnalyticRadialHistory uniform(std::function<double(double, double)> field, double t0,
                                       double t1, std::size_t intervals,
                                       double r_max = std::numeric_limits<double>::infinity()) {
    std::vector<double> t(intervals + 1);
    for (std::size_t k = 0; k <= intervals; ++k) {
      t[k] = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(intervals);
    }
    t.back() = t1;
    return {std::move(field), std::move(t), r_max};
  }

  const std::vector<double>& times() const { return times_; }
  bool inside(double r) const { return r <= r_max_; }
  double clamp(double r) const { return std::max(r, 0.0); }
  static double distance(double a, double b) { return std::fabs(b - a); }
  double velocity(double r, double t) const {
    detail::time_bracket(times_, t);
    return field_(r, t);
  }

private:
  std::function<double(double, double)> field_;
  std::vector<double> times_;
  double r_max_;
};

using Vec2 = std::array<double, 2>;

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a[0], s * a[1]}; }

/// Planar velocity snapshots on the periodic n x n grid of [0, 2 pi)^2 (row-major,
/// index iy * n + ix). Bilinear in space, linear in time.
class PlanarVelocityHistory {
public:
  using position_type = Vec2;

  struct Frame {
    std::vector<double> ux;
    std::vector<double> uy;
  };

  PlanarVelocityHistory(std::size_t n, std::vector<double> times, std::vector<Frame> frames)
      : n_(n), times_(std::move(times)), frames_(std::move(frames)) {
    detail::require_increasing(times_);
    if (frames_.size() != times_.size()) throw ConfigError("planar history: one frame per time", "history");
    for (const auto& f : frames_) {
      if (f.ux.size() != n_ * n_ || f.uy.size() != n_ * n_) {
        throw ConfigError("planar history: frame size mismatch", "history");
      }
    }
  }

  const std::vector<double>& times() const { return times_; }
  static bool inside(const Vec2&) { return true; }
  static Vec2 clamp(Vec2 x) { return x; }
  static double distance(const Vec2& a, const Vec2& b) { return std::hypot(b[0] - a[0], b[1] - a[1]); }

  Vec2 velocity(const Vec2& x, double t) const {
    const std::size_t k = detail::time_bracket(times_, t);
    const double w = std::clamp((t - times_[k]) / (times_[k + 1] - times_[k]), 0.0, 1.0);
    const Vec2 a = at(frames_[k], x);
    const Vec2 b = at(frames_[k + 1], x);
    return (1.0 - w) * a + w * b;
  }

private:
  Vec2 at(const Frame& f, const Vec2& x) const {
    const double h = 2.0 * std::numbers::pi / static_cast<double>(n_);
    auto wrap = [&](double s) {
      double g = std::fmod(s / h, static_cast<double>(n_));
      if (g < 0.0) g += static_cast<double>(n_);
      return g;
    };
    const double gx = wrap(x[0]);
    const double gy = wrap(x[1]);
    const auto ix = static_cast<std::size_t>(gx) % n_;
    const auto iy = static_cast<std::size_t>(gy) % n_;
    const double wx = gx - std::floor(gx);
    const double wy = gy - std::floor(gy);
    const std::size_t jx = (ix + 1) % n_;
    const std::size_t jy = (iy + 1) % n_;
    auto bil = [&](const std::vector<double>& u) {
      return (1 - wx) * (1 - wy) * u[iy * n_ + ix] + wx * (1 - wy) * u[iy * n_ + jx] +
             (1 - wx) * wy * u[jy * n_ + ix] + wx * wy * u[jy * n_ + jx];
    };
    return {bil(f.ux), bil(f.uy)};
  }

  std::size_t n_;
  std::vector<double> times_;
  std::vector<Frame> frames_;
};

template <class Pos>
struct ParticlePath {
  Pos x0{};
  double t0 = 0.0;
  std::vector<double> t;
  std::vector<Pos> x;
  /// |X(t1) - x0 - int u(X(s), s) ds| with the integral taken by the trapezoid rule on the samples.
  double residual = 0.0;
  bool truncated = false;
  std::size_t substeps = 4;

  const Pos& back() const { return x.back(); }
};

namespace detail {

inline double norm_of(double x) { return std::fabs(x); }
inline double norm_of(const Vec2& x) { return std::hypot(x[0], x[1]); }

template <class Pos>
Pos interpolate_path(const ParticlePath<Pos>& p, double t) {
  const bool forward = p.t.back() >= p.t.front();
  // Samples are monotone in time; locate the bracketing pair.
  std::size_t lo = 0;
  std::size_t hi = p.t.size() - 1;
  auto before = [&](double a, double b) { return forward ? a <= b : a >= b; };
  if (before(t, p.t.front())) return p.x.front();
  if (before(p.t.back(), t)) return p.x.back();
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (before(p.t[mid], t)) lo = mid; else hi = mid;
  }
  const double w = (t - p.t[lo]) / (p.t[hi] - p.t[lo]);
  return p.x[lo] + w * (p.x[hi] - p.x[lo]);
}

} // namespace detail

/// Position of the path at time t (linear between samples).
template <class Pos>
Pos position_at(const ParticlePath<Pos>& p, double t) {
  return detail::interpolate_path(p, t);
}

/// Classical RK4 integration of dX/dt = u(X, t) from (x0, t0) to t1. The step is the
/// history's knot spacing divided by `substeps`; t1 < t0 integrates backward.
template <class History>
ParticlePath<typename History::position_type> integrate_path(const History& hist,
                                                             typename History::position_type x0,
                                                             double t0, double t1,
                                                             std::size_t substeps = 4) {
  using Pos = typename History::position_type;
  const auto& knots = hist.times();
  const double eps = 1e-12 * std::max(1.0, std::fabs(knots.back()));
  if (t0 < knots.front() - eps || t0 > knots.back() + eps || t1 < knots.front() - eps ||
      t1 > knots.back() + eps) {
    throw DomainError("integrate_path: [t0, t1] outside the history span");
  }
  ParticlePath<Pos> path;
  path.x0 = x0;
  path.t0 = t0;
  path.substeps = substeps;
  path.t.push_back(t0);
  path.x.push_back(x0);
  if (t0 == t1) return path;

  const bool forward = t1 > t0;
  // Time breakpoints strictly between t0 and t1, in travel order.
  std::vector<double> stops;
  for (double k : knots) {
    if ((forward && k > t0 + eps && k < t1 - eps) || (!forward && k < t0 - eps && k > t1 + eps)) {
      stops.push_back(k);
    }
  }
  if (!forward) std::reverse(stops.begin(), stops.end());
  stops.push_back(t1);

  Pos x = x0;
  double t = t0;
  for (double stop : stops) {
    const double h = (stop - t) / static_cast<double>(substeps);
    for (std::size_t s = 0; s < substeps; ++s) {
      const double ts = s + 1 == substeps ? stop : t + h;
      const double hs = ts - t;
      const Pos k1 = hist.velocity(hist.clamp(x), t);
      const Pos k2 = hist.velocity(hist.clamp(x + (0.5 * hs) * k1), t + 0.5 * hs);
      const Pos k3 = hist.velocity(hist.clamp(x + (0.5 * hs) * k2), t + 0.5 * hs);
      const Pos k4 = hist.velocity(hist.clamp(x + hs * k3), ts);
      x = hist.clamp(x + (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
      t = ts;
      if (!hist.inside(x)) {
        path.truncated = true;
        break;
      }
      path.t.push_back(t);
      path.x.push_back(x);
    }
    if (path.truncated) break;
  }

  // Integral-equation residual on the returned samples.
  Pos integral{};
  Pos u_prev = hist.velocity(path.x.front(), path.t.front());
  for (std::size_t j = 1; j < path.t.size(); ++j) {
    const Pos u = hist.velocity(path.x[j], path.t[j]);
    integral = integral + (0.5 * (path.t[j] - path.t[j - 1])) * (u_prev + u);
    u_prev = u;
  }
  path.residual = detail::norm_of(path.x.back() - path.x.front() - integral);
  return path;
}

struct InterfaceTrack {
  std::vector<double> t;
  std::vector<double> a;
  std::vector<double> b;
  bool collision = false;
  double collision_time = std::numeric_limits<double>::quiet_NaN();
  bool truncated = false;
};

/// (a(t), b(t)) by linear interpolation of the track samples, held constant outside them.
inline std::pair<double, double> track_at(const InterfaceTrack& tr, double t) {
  auto it = std::lower_bound(tr.t.begin(), tr.t.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - tr.t.begin());
  if (j == 0) return {tr.a.front(), tr.b.front()};
  if (j >= tr.t.size()) return {tr.a.back(), tr.b.back()};
  const double w = (t - tr.t[j - 1]) / (tr.t[j] - tr.t[j - 1]);
  return {tr.a[j - 1] + w * (tr.a[j] - tr.a[j - 1]), tr.b[j - 1] + w * (tr.b[j] - tr.b[j - 1])};
}

/// Follows the vacuum edges a(t), b(t) as particle paths. A collision is flagged when the
/// gap b - a first drops to `collision_gap` (default 1e-3 (b0 - a0)); the reported time
/// interpolates the gap linearly between samples.
template <class History>
InterfaceTrack track_interfaces(const History& hist, double a0, double b0, double t0, double t1,
                                double collision_gap = -1.0, std::size_t substeps = 4) {
  if (!(a0 < b0)) throw DomainError("track_interfaces: requires a0 < b0");
  if (collision_gap < 0.0) collision_gap = 1e-3 * (b0 - a0);
  const auto pa = integrate_path(hist, a0, t0, t1, substeps);
  const auto pb = integrate_path(hist, b0, t0, t1, substeps);
  InterfaceTrack tr;
  tr.truncated = pa.truncated || pb.truncated;
  const std::size_t m = std::min(pa.t.size(), pb.t.size());
  for (std::size_t j = 0; j < m; ++j) {
    const double gap = pb.x[j] - pa.x[j];
    if (!tr.collision && gap <= collision_gap) {
      tr.collision = true;
      if (j == 0) {
        tr.collision_time = pa.t[0];
      } else {
        const double g0 = pb.x[j - 1] - pa.x[j - 1];
        const double w = (g0 - collision_gap) / (g0 - gap);
        tr.collision_time = pa.t[j - 1] + w * (pa.t[j] - pa.t[j - 1]);
      }
    }
    if (tr.collision && tr.collision_time < pa.t[j]) break;
    tr.t.push_back(pa.t[j]);
    tr.a.push_back(pa.x[j]);
    tr.b.push_back(pb.x[j]);
  }
  return tr;
}

struct OrderingReport {
  bool preserved = true;
  double min_gap = std::numeric_limits<double>::infinity();
  double initial_min_gap = std::numeric_limits<double>::infinity();
  double min_gap_time = 0.0;
  std::vector<std::pair<double, std::size_t>> violations; // (time, index of the left seed)
  std::vector<ParticlePath<double>> paths;
};

/// Integrates radial seeds and checks that they stay strictly increasing at every sample.
template <class History>
OrderingReport ordering_check(const History& hist, const std::vector<double>& seeds, double t0,
                              double t1, std::size_t substeps = 4) {
  for (std::size_t i = 1; i < seeds.size(); ++i) {
    if (!(seeds[i] > seeds[i - 1])) throw DomainError("ordering_check: seeds must be strictly increasing");
  }
  OrderingReport rep;
  for (double s : seeds) rep.paths.push_back(integrate_path(hist, s, t0, t1, substeps));
  std::size_t m = std::numeric_limits<std::size_t>::max();
  for (const auto& p : rep.paths) m = std::min(m, p.t.size());
  for (std::size_t i = 1; i < seeds.size(); ++i) rep.initial_min_gap = std::min(rep.initial_min_gap, seeds[i] - seeds[i - 1]);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 1; i < rep.paths.size(); ++i) {
      const double gap = rep.paths[i].x[j] - rep.paths[i - 1].x[j];
      if (gap < rep.min_gap) {
        rep.min_gap = gap;
        rep.min_gap_time = rep.paths[i].t[j];
      }
      if (!(gap > 0.0)) {
        rep.preserved = false;
        rep.violations.emplace_back(rep.paths[i].t[j], i - 1);
      }
    }
  }
  return rep;
}

struct HolderFit {
  double alpha = 1.0;
  double K = 1.0;
  std::size_t pairs = 0;
};

/// Empirical Hoelder exponent of the flow map between the seeds y1 and y2. Seeds
/// y1 + (y2 - y1) 2^-m (m = 0..levels-1) provide separations over several scales; for
/// every pair t_i < t_j on the grid the log-log slope of d(t_j) against d(t_i) is fitted
/// and alpha is the smallest slope, clipped to (0, 1]. K = max d(t_j) / d(t_i)^alpha.
template <class History>
HolderFit holder_exponent_probe(const History& hist, typename History::position_type y1,
                                typename History::position_type y2,
                                const std::vector<double>& t_grid, std::size_t levels = 6,
                                std::size_t substeps = 4) {
  using Pos = typename History::position_type;
  if (History::distance(y1, y2) == 0.0) throw DomainError("holder_exponent_probe: requires y1 != y2");
  if (t_grid.size() < 2) throw DomainError("holder_exponent_probe: needs at least two times");
  const double t0 = t_grid.front();
  const double t1 = t_grid.back();
  const auto base = integrate_path(hist, y1, t0, t1, substeps);
  std::vector<ParticlePath<Pos>> others;
  for (std::size_t m = 0; m < levels; ++m) {
    const double s = std::ldexp(1.0, -static_cast<int>(m));
    others.push_back(integrate_path(hist, y1 + s * (y2 - y1), t0, t1, substeps));
  }
  // d[m][i]: separation of level m at grid time i.
  std::vector<std::vector<double>> d(levels, std::vector<double>(t_grid.size()));
  for (std::size_t m = 0; m < levels; ++m) {
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      d[m][i] = History::distance(position_at(base, t_grid[i]), position_at(others[m], t_grid[i]));
    }
  }
  HolderFit fit;
  double alpha = 1.0;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    for (std::size_t j = i + 1; j < t_grid.size(); ++j) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      const auto nl = static_cast<double>(levels);
      for (std::size_t m = 0; m < levels; ++m) {
        const double lx = std::log(d[m][i]);
        const double ly = std::log(d[m][j]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
      }
      const double var = sxx - sx * sx / nl;
      if (var <= 0.0) continue;
      const double slope = (sxy - sx * sy / nl) / var;
      alpha = std::min(alpha, slope);
      ++fit.pairs;
    }
  }
  fit.alpha = std::clamp(alpha, std::numeric_limits<double>::min(), 1.0);
  double K = 0.0;
  for (std::size_t m = 0; m < levels; ++m) {
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      for (std::size_t j = i + 1; j < t_grid.size(); ++j) {
        K = std::max(K, d[m][j] / std::pow(d[m][i], fit.alpha));
      }
    }
  }
  fit.K = K;
  return fit;
}

/// Log-Lipschitz modulus m(x) = x (1 - ln x) on (0, 1], x beyond.
inline double log_lipschitz_modulus(double x) {
  if (!(x > 0.0)) throw DomainError("log_lipschitz_modulus: requires x > 0");
  return x <= 1.0 ? x * (1.0 - std::log(x)) : x;
}

/// Trapezoid value of int |u(X2) - u(X1)| / m(|X2 - X1|) dt along two paths sharing
/// their sample times.
template <class History>
double osgood_integral(const History& hist, const ParticlePath<typename History::position_type>& p1,
                       const ParticlePath<typename History::position_type>& p2) {
  const std::size_t m = std::min(p1.t.size(), p2.t.size());
  auto integrand = [&](std::size_t j) {
    const auto du = hist.velocity(p2.x[j], p2.t[j]) - hist.velocity(p1.x[j], p1.t[j]);
    return detail::norm_of(du) / log_lipschitz_modulus(History::distance(p1.x[j], p2.x[j]));
  };
  double s = 0.0;
  for (std::size_t j = 1; j < m; ++j) {
    s += 0.5 * std::fabs(p1.t[j] - p1.t[j - 1]) * (integrand(j) + integrand(j - 1));
  }
  return s;
}

} // namespace viscoflux
