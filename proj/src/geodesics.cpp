#include "geoxray/geodesics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>

#include "geoxray/errors.hpp"

namespace geoxray {

namespace {

// (x, y, xi_x, xi_y) with dx/dt = c^2 xi, dxi/dt = -grad ln c.
using State = std::array<double, 4>;

State flow(const ConformalMetric& m, const State& s) {
  const auto loc = m.local(s[0], s[1]);
  return {loc.c2 * s[2], loc.c2 * s[3], -loc.dlog_x, -loc.dlog_y};
}

State axpy(const State& s, double h, const State& d) {
  return {s[0] + h * d[0], s[1] + h * d[1], s[2] + h * d[2], s[3] + h * d[3]};
}

State rk4_step(const ConformalMetric& m, const State& s, double h) {
  const State k1 = flow(m, s);
  const State k2 = flow(m, axpy(s, 0.5 * h, k1));
  const State k3 = flow(m, axpy(s, 0.5 * h, k2));
  const State k4 = flow(m, axpy(s, h, k3));
  State out;
  for (int i = 0; i < 4; ++i)
    out[i] = s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

void renormalize(const ConformalMetric& m, State& s) {
  const double c = m.speed_at(s[0], s[1]);
  const double scale = 1.0 / (c * std::hypot(s[2], s[3]));
  s[2] *= scale;
  s[3] *= scale;
}

PhasePoint to_phase(const ConformalMetric& m, const State& s) {
  const double c2 = std::exp(2.0 * m.log_speed().evaluate(s[0], s[1]));
  return {{s[0], s[1]}, {c2 * s[2], c2 * s[3]}};
}

double radius2(const State& s) { return s[0] * s[0] + s[1] * s[1]; }

Point2 hermite(const PhasePoint& a, const PhasePoint& b, double h, double u) {
  const double u2 = u * u, u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u;
  const double h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
  return {h00 * a.x.x + h10 * h * a.v.x + h01 * b.x.x + h11 * h * b.v.x,
          h00 * a.x.y + h10 * h * a.v.y + h01 * b.x.y + h11 * h * b.v.y};
}

}  // namespace

double default_step(const ConformalMetric& m) {
  return m.grid().spacing() / (2.0 * m.c_max());
}

PhasePoint make_phase_point(const ConformalMetric& m, Point2 x, Point2 dir) {
  const double c = m.speed_at(x.x, x.y);
  const double len = std::hypot(dir.x, dir.y);
  return {x, {c * dir.x / len, c * dir.y / len}};
}

Point2 GeodesicPath::position_at(double time) const {
  if (time <= t.front()) return points.front().x;
  if (time >= t.back()) return points.back().x;
  const auto it = std::upper_bound(t.begin(), t.end(), time);
  const auto i = static_cast<std::size_t>(it - t.begin()) - 1;
  const double h = t[i + 1] - t[i];
  return hermite(points[i], points[i + 1], h, (time - t[i]) / h);
}

PhasePoint GeodesicPath::state_at(double time) const {
  if (time <= t.front()) return points.front();
  if (time >= t.back()) return points.back();
  const auto it = std::upper_bound(t.begin(), t.end(), time);
  const auto i = static_cast<std::size_t>(it - t.begin()) - 1;
  const double h = t[i + 1] - t[i];
  const double s = (time - t[i]) / h;
  const Point2 v{(1.0 - s) * points[i].v.x + s * points[i + 1].v.x,
                 (1.0 - s) * points[i].v.y + s * points[i + 1].v.y};
  return {hermite(points[i], points[i + 1], h, s), v};
}

GeodesicPath shoot(const ConformalMetric& m, const PhasePoint& start,
                   const ShootOptions& opts) {
  const double dt = opts.dt > 0.0 ? opts.dt : default_step(m);
  if (start.x.x * start.x.x + start.x.y * start.x.y > 1.0 + 1e-12)
    throw ConfigError("geodesic start lies outside the unit disk");

  const double c0 = m.speed_at(start.x.x, start.x.y);
  State s{start.x.x, start.x.y, start.v.x / (c0 * c0), start.v.y / (c0 * c0)};
  renormalize(m, s);

  GeodesicPath path;
  auto attenuation_at = [&](const State& st) {
    return opts.attenuation ? opts.attenuation->evaluate(st[0], st[1]) : 0.0;
  };
  double t = 0.0;
  double a_prev = attenuation_at(s);
  path.t.push_back(0.0);
  path.points.push_back(to_phase(m, s));
  path.cum_atten.push_back(0.0);

  for (int step = 0;; ++step) {
    if (step >= opts.max_steps)
      throw NumericalError("geodesic exceeded " + std::to_string(opts.max_steps) +
                           " steps: possibly trapped");
    State next = rk4_step(m, s, dt);
    double h = dt;
    const bool exits = radius2(next) >= 1.0;
    if (exits) {
      // Bisection on the step length; [lo, hi] brackets |x| = 1.
      double lo = 0.0, hi = dt;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const State trial = rk4_step(m, s, mid);
        const double r = std::sqrt(radius2(trial));
        if (std::abs(r - 1.0) <= 1e-11) {
          hi = mid;
          break;
        }
        if (r < 1.0) lo = mid; else hi = mid;
        if (hi - lo < 1e-15) break;
      }
      h = hi;
      next = rk4_step(m, s, h);
    }
    renormalize(m, next);
    t += h;
    const double a_next = attenuation_at(next);
    path.t.push_back(t);
    path.points.push_back(to_phase(m, next));
    path.cum_atten.push_back(path.cum_atten.back() + 0.5 * h * (a_prev + a_next));
    a_prev = a_next;
    s = next;
    if (exits) break;
  }
  path.tau = t;
  return path;
}

RaySet make_rayset(int n_beta, int n_alpha) {
  if (n_beta < 8 || n_alpha < 8)
    throw ConfigError("rayset needs n_beta, n_alpha >= 8");
  constexpr double pi = std::numbers::pi;
  const double d_beta = 2.0 * pi / n_beta;
  const double d_alpha = pi / n_alpha;
  RaySet rays;
  rays.n_beta = n_beta;
  rays.n_alpha = n_alpha;
  rays.entries.reserve(static_cast<std::size_t>(n_beta) * n_alpha);
  for (int ib = 0; ib < n_beta; ++ib) {
    const double beta = ib * d_beta;
    const Point2 x{std::cos(beta), std::sin(beta)};
    for (int ia = 0; ia < n_alpha; ++ia) {
      const double alpha = -0.5 * pi + (ia + 0.5) * d_alpha;
      const double ca = std::cos(alpha), sa = std::sin(alpha);
      // Inner normal -x rotated by alpha.
      const Point2 dir{-(ca * x.x - sa * x.y), -(sa * x.x + ca * x.y)};
      rays.entries.push_back({beta, alpha, x, dir, ca * d_beta * d_alpha});
    }
  }
  return rays;
}

PhasePoint start_of(const ConformalMetric& m, const RayEntry& ray) {
  return make_phase_point(m, ray.x, ray.dir);
}

JacobiSolution jacobi(const ScalarField2D& curvature, const GeodesicPath& path) {
  JacobiSolution sol;
  const std::size_t n = path.size();
  sol.t = path.t;
  sol.b.resize(n);
  sol.b_dot.resize(n);
  sol.b[0] = 0.0;
  sol.b_dot[0] = 1.0;

  std::vector<double> k_node(n);
  for (std::size_t i = 0; i < n; ++i)
    k_node[i] = curvature.evaluate(path.points[i].x);

  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = path.t[i + 1] - path.t[i];
    const double k0 = k_node[i];
    const double km = curvature.evaluate(hermite(path.points[i], path.points[i + 1], h, 0.5));
    const double k1 = k_node[i + 1];
    const double b = sol.b[i], bd = sol.b_dot[i];
    const double k1b = bd, k1d = -k0 * b;
    const double k2b = bd + 0.5 * h * k1d, k2d = -km * (b + 0.5 * h * k1b);
    const double k3b = bd + 0.5 * h * k2d, k3d = -km * (b + 0.5 * h * k2b);
    const double k4b = bd + h * k3d, k4d = -k1 * (b + h * k3b);
    sol.b[i + 1] = b + h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b);
    sol.b_dot[i + 1] = bd + h / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d);
  }

  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double b0 = sol.b[i], b1 = sol.b[i + 1];
    if (b0 == 0.0 || (b0 > 0.0) == (b1 > 0.0)) continue;
    if (b1 == 0.0 && i + 2 == n) continue;  // zero exactly at exit
    const double h = path.t[i + 1] - path.t[i];
    const double u = b0 / (b0 - b1);
    const double t0 = path.t[i] + u * h;
    sol.conjugate_times.push_back(t0);
    sol.conjugate_bdot.push_back(sol.b_dot[i] + u * (sol.b_dot[i + 1] - sol.b_dot[i]));
    sol.conjugate_points.push_back(hermite(path.points[i], path.points[i + 1], h, u));
  }
  return sol;
}

JacobiSolution jacobi(const ConformalMetric& m, const GeodesicPath& path) {
  return jacobi(m.curvature(), path);
}

double bdot_ratio(const JacobiSolution& j, double t0) {
  for (std::size_t k = 0; k < j.conjugate_times.size(); ++k) {
    if (std::abs(j.conjugate_times[k] - t0) <= 1e-12 * std::max(1.0, std::abs(t0)))
      return std::abs(j.conjugate_bdot[k]) / std::abs(j.b_dot.front());
  }
  throw ConfigError("bdot_ratio: t0 is not a recorded conjugate time");
}

std::vector<LocusPoint> conjugate_locus(const ConformalMetric& m, Point2 p,
                                        int n_dirs, double dt) {
  if (p.x * p.x + p.y * p.y >= 1.0)
    throw ConfigError("conjugate_locus: p must lie in the open disk");
  const auto& curvature = m.curvature();
  std::vector<LocusPoint> locus;
  ShootOptions opts;
  opts.dt = dt;
  for (int k = 0; k < n_dirs; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / n_dirs;
    const auto path =
        shoot(m, make_phase_point(m, p, {std::cos(angle), std::sin(angle)}), opts);
    const auto j = jacobi(curvature, path);
    if (!j.conjugate_points.empty()) locus.push_back({angle, j.conjugate_points.front()});
  }
  return locus;
}

void write_path_csv(const GeodesicPath& path, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot open " + file.string());
  out << "t,x,y,vx,vy,cum_atten\n";
  for (std::size_t i = 0; i < path.size(); ++i) {
    const auto& p = path.points[i];
    out << format_double(path.t[i]) << ',' << format_double(p.x.x) << ','
        << format_double(p.x.y) << ',' << format_double(p.v.x) << ','
        << format_double(p.v.y) << ',' << format_double(path.cum_atten[i]) << '\n';
  }
}

void write_locus_csv(const std::vector<LocusPoint>& locus,
                     const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot open " + file.string());
  out << "dir_angle,qx,qy\n";
  for (const auto& l : locus)
    out << format_double(l.angle) << ',' << format_double(l.q.x) << ','
        << format_double(l.q.y) << '\n';
}

}  // namespace geoxray
