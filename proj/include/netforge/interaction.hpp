#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/numeric/odeint.hpp>

#include "netforge/geometry.hpp"

namespace netforge {

// f(u) = |u|^{p-1} u - c |u|^{q-1} u.
struct Nonlinearity {
  double p = 3.0;
  double c = 0.0;
  double q = 2.0;

  bool is_cubic() const { return p == 3.0 && c == 0.0; }

  void validate() const {
    if (!std::isfinite(p) || !std::isfinite(c) || !std::isfinite(q)) throw DomainError("nonlinearity parameters must be finite");
    if (!(p > 1.0)) throw DomainError("nonlinearity needs p > 1");
    if (!(c >= 0.0)) throw DomainError("nonlinearity needs c >= 0");
    if (c > 0.0 && !(q > 1.0 && q < p)) throw DomainError("nonlinearity needs 1 < q < p");
  }

  double f(double u) const {
    if (is_cubic()) return u * u * u;
    const double a = std::abs(u);
    double v = std::pow(a, p - 1.0) * u;
    if (c != 0.0) v -= c * std::pow(a, q - 1.0) * u;
    return v;
  }

  double df(double u) const {
    if (is_cubic()) return 3.0 * u * u;
    const double a = std::abs(u);
    double v = p * std::pow(a, p - 1.0);
    if (c != 0.0) v -= c * q * std::pow(a, q - 1.0);
    return v;
  }

  double d2f(double u) const {
    if (is_cubic()) return 6.0 * u;
    const double a = std::abs(u), sg = u < 0.0 ? -1.0 : 1.0;
    if (a == 0.0) return 0.0;
    double v = p * (p - 1.0) * std::pow(a, p - 2.0) * sg;
    if (c != 0.0) v -= c * q * (q - 1.0) * std::pow(a, q - 2.0) * sg;
    return v;
  }

  // f(v + d) - f(v), accurate when |d| << |v|.
  double increment(double v, double d) const {
    if (is_cubic()) return d * (3.0 * v * v + 3.0 * v * d + d * d);
    if (v < 0.0) return -increment(-v, -d);
    if (v == 0.0 || std::abs(d) >= 0.5 * v) return f(v + d) - f(v);
    const double x = std::log1p(d / v);
    double out = std::pow(v, p) * std::expm1(p * x);
    if (c != 0.0) out -= c * std::pow(v, q) * std::expm1(q * x);
    return out;
  }
};

struct TableOptions {
  double h = 0.005;         // radial grid step
  double r_match = 9.0;     // shooting stops here, modified-Bessel tail beyond
  double r_shoot = 25.0;    // classification horizon for the bisection
  double r_grid = 150.0;    // stored grid end
  double s_min = 2.0;
  double s_max = 130.0;
  double s_step = 0.25;
  double disc_radius = 18.0;  // quadrature support of f'(u0) u0'
  double panel = 0.5;
  int phi_nodes = 512;
  bool with_upsilon = true;
};

struct ProfileSample {
  double u = 0.0, du = 0.0, d2u = 0.0;
};

struct UpsilonSample {
  double value = 0.0, derivative = 0.0;
};

namespace detail {

inline std::string hexfloat(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

// Quintic Hermite on [0, 1] from values, first and second derivatives (scaled by h).
inline ProfileSample quintic_hermite(double t, double h, const ProfileSample& a, const ProfileSample& b) {
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  const double H0 = 1 - 10 * t3 + 15 * t4 - 6 * t5, H1 = t - 6 * t3 + 8 * t4 - 3 * t5;
  const double H2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5), H3 = 10 * t3 - 15 * t4 + 6 * t5;
  const double H4 = -4 * t3 + 7 * t4 - 3 * t5, H5 = 0.5 * (t3 - 2 * t4 + t5);
  const double D0 = -30 * t2 + 60 * t3 - 30 * t4, D1 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
  const double D2 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4), D3 = 30 * t2 - 60 * t3 + 30 * t4;
  const double D4 = -12 * t2 + 28 * t3 - 15 * t4, D5 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);
  const double S0 = -60 * t + 180 * t2 - 120 * t3, S1 = -36 * t + 96 * t2 - 60 * t3;
  const double S2 = 0.5 * (2 - 18 * t + 36 * t2 - 20 * t3), S3 = 60 * t - 180 * t2 + 120 * t3;
  const double S4 = -24 * t + 84 * t2 - 60 * t3, S5 = 0.5 * (6 * t - 24 * t2 + 20 * t3);
  const double ya = a.u, pa = a.du * h, qa = a.d2u * h * h, yb = b.u, pb = b.du * h, qb = b.d2u * h * h;
  ProfileSample out;
  out.u = H0 * ya + H1 * pa + H2 * qa + H3 * yb + H4 * pb + H5 * qb;
  out.du = (D0 * ya + D1 * pa + D2 * qa + D3 * yb + D4 * pb + D5 * qb) / h;
  out.d2u = (S0 * ya + S1 * pa + S2 * qa + S3 * yb + S4 * pb + S5 * qb) / (h * h);
  return out;
}

// Cubic Hermite returning value, first and second derivative.
inline std::array<double, 3> cubic_hermite(double t, double h, double ya, double pa, double yb, double pb) {
  const double t2 = t * t, t3 = t2 * t;
  const double v = (2 * t3 - 3 * t2 + 1) * ya + (t3 - 2 * t2 + t) * h * pa + (-2 * t3 + 3 * t2) * yb +
                   (t3 - t2) * h * pb;
  const double d = ((6 * t2 - 6 * t) * ya + (3 * t2 - 4 * t + 1) * h * pa + (-6 * t2 + 6 * t) * yb +
                    (3 * t2 - 2 * t) * h * pb) / h;
  const double s = ((12 * t - 6) * ya + (6 * t - 4) * h * pa + (-12 * t + 6) * yb + (6 * t - 2) * h * pb) / (h * h);
  return {v, d, s};
}

}  // namespace detail

class InteractionTable {
 public:
  using State = std::array<double, 2>;

  static InteractionTable build(const Nonlinearity& nl, const TableOptions& opt = {}) {
    nl.validate();
    check_options(opt);
    InteractionTable t;
    t.nl_ = nl;
    t.opt_ = opt;
    t.shoot();
    t.fill_tail();
    t.finish_profile();
    if (opt.with_upsilon) {
      t.fill_upsilon();
      t.finish_upsilon();
    }
    return t;
  }

  // Reads the table from the cache directory when present, otherwise builds and stores it.
  static InteractionTable load_or_build(const Nonlinearity& nl, const TableOptions& opt = {},
                                        const std::string& cache_dir = env_cache_dir()) {
    if (cache_dir.empty()) return build(nl, opt);
    const std::filesystem::path file = std::filesystem::path(cache_dir) / cache_file_name(nl, opt);
    if (std::filesystem::exists(file)) {
      try {
        return load(file.string(), nl, opt);
      } catch (const Error&) {
        // stale or truncated file: rebuild below
      }
    }
    InteractionTable t = build(nl, opt);
    std::error_code ec;
    std::filesystem::create_directories(cache_dir, ec);
    const std::string tmp = file.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      if (out) out << t.serialize();
    }
    std::filesystem::rename(tmp, file, ec);
    return t;
  }

  static std::string env_cache_dir() {
    const char* e = std::getenv("NETFORGE_CACHE");
    return e ? std::string(e) : std::string();
  }

  static std::string cache_key(const Nonlinearity& nl, const TableOptions& o) {
    std::ostringstream k;
    k << "netforge-table v1 p=" << detail::hexfloat(nl.p) << " c=" << detail::hexfloat(nl.c)
      << " q=" << detail::hexfloat(nl.q) << " h=" << detail::hexfloat(o.h) << " rm=" << detail::hexfloat(o.r_match)
      << " rs=" << detail::hexfloat(o.r_shoot) << " rg=" << detail::hexfloat(o.r_grid)
      << " s=" << detail::hexfloat(o.s_min) << ":" << detail::hexfloat(o.s_step) << ":" << detail::hexfloat(o.s_max)
      << " disc=" << detail::hexfloat(o.disc_radius) << " panel=" << detail::hexfloat(o.panel)
      << " phi=" << o.phi_nodes << " ups=" << int(o.with_upsilon);
    return k.str();
  }

  static std::string cache_file_name(const Nonlinearity& nl, const TableOptions& o) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "table-%016llx.txt", static_cast<unsigned long long>(detail::fnv1a(cache_key(nl, o))));
    return buf;
  }

  std::string serialize() const {
    std::ostringstream s;
    s << cache_key(nl_, opt_) << "\n";
    s << detail::hexfloat(u_center_) << " " << detail::hexfloat(tail_a_) << " " << detail::hexfloat(tail_b_) << "\n";
    s << u_.size() << "\n";
    for (std::size_t i = 0; i < u_.size(); ++i)
      s << detail::hexfloat(u_[i]) << " " << detail::hexfloat(du_[i]) << " " << detail::hexfloat(d2u_[i]) << "\n";
    s << s_nodes_.size() << "\n";
    for (std::size_t i = 0; i < s_nodes_.size(); ++i)
      s << detail::hexfloat(ln_ups_[i]) << " " << detail::hexfloat(dln_ups_[i]) << "\n";
    return s.str();
  }

  static InteractionTable load(const std::string& path, const Nonlinearity& nl, const TableOptions& opt) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open table '" + path + "'");
    std::string key;
    std::getline(in, key);
    if (key != cache_key(nl, opt)) throw InputError("table key mismatch");
    auto num = [&]() {
      std::string tok;
      if (!(in >> tok)) throw InputError("truncated table file");
      char* end = nullptr;
      const double x = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str()) throw InputError("bad number in table file");
      return x;
    };
    InteractionTable t;
    t.nl_ = nl;
    t.opt_ = opt;
    t.u_center_ = num();
    t.tail_a_ = num();
    t.tail_b_ = num();
    std::size_t n = 0;
    if (!(in >> n) || n != t.grid_size()) throw InputError("table grid size mismatch");
    t.u_.resize(n);
    t.du_.resize(n);
    t.d2u_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      t.u_[i] = num();
      t.du_[i] = num();
      t.d2u_[i] = num();
    }
    t.finish_profile();
    std::size_t ns = 0;
    if (!(in >> ns)) throw InputError("truncated table file");
    if (opt.with_upsilon) {
      t.make_s_nodes();
      if (ns != t.s_nodes_.size()) throw InputError("table upsilon size mismatch");
      t.ln_ups_.resize(ns);
      t.dln_ups_.resize(ns);
      for (std::size_t i = 0; i < ns; ++i) {
        t.ln_ups_[i] = num();
        t.dln_ups_[i] = num();
      }
      t.finish_upsilon();
    }
    return t;
  }

  const Nonlinearity& nonlinearity() const { return nl_; }
  const TableOptions& options() const { return opt_; }
  double u_center() const { return u_center_; }
  double tail_amplitude() const { return tail_a_; }
  // Coefficient of the growing I_0 mode left by the shooting at the matching radius, relative to u there.
  double tail_contamination() const { return tail_b_; }
  double grid_step() const { return opt_.h; }
  double grid_end() const { return double(u_.size() - 1) * opt_.h; }
  const std::vector<double>& grid_u() const { return u_; }
  const std::vector<double>& grid_du() const { return du_; }
  bool has_upsilon() const { return !ln_ups_.empty(); }

  ProfileSample profile(double r) const {
    r = std::abs(r);
    const double h = opt_.h;
    if (r <= opt_.r_match) {
      std::size_t i = std::min(std::size_t(r / h), match_index_ - 1);
      const double t = (r - double(i) * h) / h;
      return detail::quintic_hermite(t, h, {u_[i], du_[i], d2u_[i]}, {u_[i + 1], du_[i + 1], d2u_[i + 1]});
    }
    ProfileSample s;
    if (r < grid_end()) {
      std::size_t i = std::clamp(std::size_t(r / h), match_index_, u_.size() - 2);
      const double t = (r - double(i) * h) / h;
      const auto g = detail::cubic_hermite(t, h, lg_[i], lgp_[i], lg_[i + 1], lgp_[i + 1]);
      s.u = std::exp(g[0] - r);
      s.du = s.u * (g[1] - 1.0);
      s.d2u = s.u * ((g[1] - 1.0) * (g[1] - 1.0) + g[2]);
      return s;
    }
    if (r > 700.0) return s;
    const double k0 = std::cyl_bessel_k(0.0, r), k1 = std::cyl_bessel_k(1.0, r);
    s.u = tail_a_ * k0;
    s.du = -tail_a_ * k1;
    s.d2u = tail_a_ * (k0 + k1 / r);
    return s;
  }

  double u0(double r) const { return profile(r).u; }
  double du0(double r) const { return profile(r).du; }

  // Plain ODE residual of the stored interpolant: u'' + u'/r - u + f(u).
  double ode_residual(double r) const {
    const auto s = profile(r);
    const double lap = r > 0.0 ? s.d2u + s.du / r : 2.0 * s.d2u;
    return lap - s.u + nl_.f(s.u);
  }

  // Flux form over grid cell i: [(r u')]_{r_i}^{r_{i+1}} - int r (u - f(u)) dr, divided by the
  // cell volume. Unlike the pointwise form it is not dominated by roundoff in u''.
  double cell_residual(std::size_t i) const {
    const double h = opt_.h, a = double(i) * h, b = a + h;
    static const double gx[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    double src = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double r = 0.5 * (a + b) + 0.5 * h * gx[k];
      const double u = u0(r);
      src += gw[k] * 0.5 * h * r * (u - nl_.f(u));
    }
    const double flux = b * du0(b) - a * du0(a);
    return (flux - src) / (0.5 * (a + b) * h);
  }
  std::size_t grid_cells() const { return u_.size() - 1; }

  // Direct quadrature of -int u0(z - s e) d_e f(u0)(z) dz with e at angle beta.
  UpsilonSample upsilon_quadrature(double s, double beta = 0.0) const {
    if (!(s > 0.0)) throw DomainError("upsilon needs s > 0");
    const int N = opt_.phi_nodes;
    const double dphi = 2.0 * kPi / double(N);
    UpsilonSample out;
    for (const auto& node : radial_nodes_) {
      const double r = node.r;
      double sv = 0.0, sd = 0.0;
      for (int k = 0; k < N; ++k) {
        const double c = std::cos(dphi * double(k) - beta);
        const double rho2 = r * r + s * s - 2.0 * r * s * c;
        const double rho = std::sqrt(std::max(rho2, 0.0));
        const ProfileSample p = profile(rho);
        sv += p.u * c;
        if (rho > 0.0) sd += p.du * (s - r * c) / rho * c;
      }
      out.value -= node.weight * sv * dphi;
      out.derivative -= node.weight * sd * dphi;
    }
    return out;
  }

  double log_upsilon(double s) const { return log_upsilon_sample(s)[0]; }
  double dlog_upsilon(double s) const { return log_upsilon_sample(s)[1]; }
  double upsilon(double s) const { return std::exp(log_upsilon(s)); }
  double dupsilon(double s) const {
    const auto v = log_upsilon_sample(s);
    return std::exp(v[0]) * v[1];
  }

  // Value of -ln Y(s) - s - ln(s)/2 averaged over [15, 25].
  double fitted_tail_constant() const { return c_fit_; }
  std::pair<double, double> monotone_range() const { return {mono_lo_, mono_hi_}; }
  double upsilon_table_max() const { return opt_.s_max; }

  // Root of Y(ell (1 - alpha)) = |a| Y(ell) in the monotone range.
  double alpha(double a, double ell) const {
    if (!(a != 0.0) || !std::isfinite(a)) throw DomainError("alpha_ell needs a nonzero weight");
    if (!(ell >= mono_lo_)) throw DomainError("ell below the monotone range of the interaction function");
    const double target = std::log(std::abs(a)) + log_upsilon(ell);
    if (std::abs(a) == 1.0) return 0.0;
    double lo = mono_lo_, hi = std::max(ell, mono_lo_);
    if (log_upsilon(lo) < target) throw DomainError("alpha_ell root outside the monotone range");
    while (log_upsilon(hi) > target) {
      hi = 2.0 * hi + 1.0;
      if (hi > 1e6) throw DomainError("alpha_ell root outside the monotone range");
    }
    double s = 0.5 * (lo + hi);
    for (int it = 0; it < 200 && hi - lo > 1e-9 * hi; ++it) {
      s = 0.5 * (lo + hi);
      (log_upsilon(s) > target ? lo : hi) = s;
    }
    s = 0.5 * (lo + hi);
    for (int it = 0; it < 8; ++it) {
      const auto v = log_upsilon_sample(s);
      const double step = (v[0] - target) / v[1];
      s -= step;
      if (std::abs(step) < 1e-15 * s) break;
    }
    return 1.0 - s / ell;
  }

  // d alpha / d a from implicit differentiation.
  double dalpha_da(double a, double ell) const {
    const double al = alpha(a, ell);
    return -1.0 / (a * ell * dlog_upsilon(ell * (1.0 - al)));
  }

  // C* = 1 / (pi int u0'^2 r dr), Simpson with the given step.
  double c_star(double step = 0.0) const {
    if (step <= 0.0) step = opt_.h;
    const double R = grid_end();
    std::size_t n = std::size_t(std::llround(R / step));
    if (n % 2) ++n;
    const double hs = R / double(n);
    double acc = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      const double r = hs * double(i);
      const double d = du0(r);
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      acc += w * d * d * r;
    }
    return 1.0 / (kPi * acc * hs / 3.0);
  }

 private:
  struct RadialNode {
    double r, weight;  // weight includes r dr and f'(u0) u0'
  };

  Nonlinearity nl_;
  TableOptions opt_;
  double u_center_ = 0.0, tail_a_ = 0.0, tail_b_ = 0.0;
  std::vector<double> u_, du_, d2u_, lg_, lgp_;
  std::size_t match_index_ = 0;
  std::vector<RadialNode> radial_nodes_;
  std::vector<double> s_nodes_, ln_ups_, dln_ups_;
  double c_fit_ = 0.0, mono_lo_ = 0.0, mono_hi_ = 0.0;

  static void check_options(const TableOptions& o) {
    if (!(o.h > 0.0 && o.h <= 0.05)) throw DomainError("grid step out of range");
    if (!(o.r_match > 2.0 && o.r_shoot > o.r_match && o.r_grid > o.r_match)) throw DomainError("bad radial ranges");
    if (!(o.s_min > 0.0 && o.s_step > 0.0 && o.s_max > o.s_min)) throw DomainError("bad upsilon range");
    if (o.phi_nodes < 16 || o.phi_nodes % 4) throw DomainError("phi_nodes must be a multiple of 4");
  }

  std::size_t grid_size() const { return std::size_t(std::llround(opt_.r_grid / opt_.h)) + 1; }

  double rhs_second(double r, double u, double du) const {
    return r > 0.0 ? -du / r + u - nl_.f(u) : 0.5 * (u - nl_.f(u));
  }

  // Taylor start u = u0 + a r^2 + b r^4 + c r^6 at r = h, then fixed-step RK78.
  State taylor_start(double u0, double r) const {
    const double g = u0 - nl_.f(u0), dg = 1.0 - nl_.df(u0), d2g = -nl_.d2f(u0);
    const double a = g / 4.0, b = dg * a / 16.0, c = (0.5 * d2g * a * a + dg * b) / 36.0;
    const double r2 = r * r;
    return {u0 + r2 * (a + r2 * (b + r2 * c)), r * (2.0 * a + r2 * (4.0 * b + 6.0 * c * r2))};
  }

  // One grid step; substeps near the origin keep the u'/r term from spoiling the order.
  template <class Stepper, class Sys>
  static void advance(Stepper& stepper, Sys& sys, State& y, double r, double h) {
    const int n = std::max(1, int(std::ceil(32.0 * h / r)));
    const double dh = h / n;
    for (int k = 0; k < n; ++k) stepper.do_step(sys, y, r + k * dh, dh);
  }

  // -1: u crossed zero (start too high), +1: u turned up while positive (too low), 0: neither.
  int classify(double u0) const {
    using namespace boost::numeric::odeint;
    runge_kutta_fehlberg78<State> stepper;
    const double h = opt_.h;
    State y = taylor_start(u0, h);
    auto sys = [this](const State& x, State& dx, double r) {
      dx[0] = x[1];
      dx[1] = rhs_second(r, x[0], x[1]);
    };
    for (std::size_t i = 1; double(i) * h < opt_.r_shoot; ++i) {
      advance(stepper, sys, y, double(i) * h, h);
      if (!(y[0] > 0.0)) return -1;
      if (y[1] > 0.0) return +1;
    }
    return 0;
  }

  void shoot() {
    double lo = 2.0, hi = 2.5;
    int tries = 0;
    while (classify(lo) != +1) {
      lo *= 0.5;
      if (++tries > 60) throw SolverError("shooting bracket failure (no undershoot)");
    }
    tries = 0;
    while (classify(hi) != -1) {
      hi *= 1.5;
      if (++tries > 60) throw SolverError("shooting bracket failure (no overshoot)");
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const int c = classify(mid);
      if (c == 0) {
        lo = hi = mid;
        break;
      }
      (c > 0 ? lo : hi) = mid;
    }
    u_center_ = 0.5 * (lo + hi);

    using namespace boost::numeric::odeint;
    runge_kutta_fehlberg78<State> stepper;
    const double h = opt_.h;
    const std::size_t n = grid_size();
    match_index_ = std::size_t(std::llround(opt_.r_match / h));
    u_.assign(n, 0.0);
    du_.assign(n, 0.0);
    d2u_.assign(n, 0.0);
    u_[0] = u_center_;
    d2u_[0] = rhs_second(0.0, u_center_, 0.0);
    State y = taylor_start(u_center_, h);
    auto sys = [this](const State& x, State& dx, double r) {
      dx[0] = x[1];
      dx[1] = rhs_second(r, x[0], x[1]);
    };
    for (std::size_t i = 1; i <= match_index_; ++i) {
      const double r = double(i) * h;
      if (i > 1) advance(stepper, sys, y, r - h, h);
      u_[i] = y[0];
      du_[i] = y[1];
      d2u_[i] = rhs_second(r, y[0], y[1]);
    }
    // Decaying/growing split of the linearized tail by Wronskians with K_0, I_0.
    const double R = double(match_index_) * h, um = u_[match_index_], dm = du_[match_index_];
    tail_a_ = R * (um * std::cyl_bessel_i(1.0, R) - dm * std::cyl_bessel_i(0.0, R));
    const double b = R * (um * std::cyl_bessel_k(1.0, R) + dm * std::cyl_bessel_k(0.0, R));
    tail_b_ = b * std::cyl_bessel_i(0.0, R) / um;
  }

  void fill_tail() {
    const double h = opt_.h;
    for (std::size_t i = match_index_ + 1; i < u_.size(); ++i) {
      const double r = double(i) * h;
      const double k0 = std::cyl_bessel_k(0.0, r), k1 = std::cyl_bessel_k(1.0, r);
      u_[i] = tail_a_ * k0;
      du_[i] = -tail_a_ * k1;
      d2u_[i] = tail_a_ * (k0 + k1 / r);
    }
  }

  void finish_profile() {
    const double h = opt_.h;
    match_index_ = std::size_t(std::llround(opt_.r_match / h));
    lg_.assign(u_.size(), 0.0);
    lgp_.assign(u_.size(), 0.0);
    for (std::size_t i = match_index_ + 1; i < u_.size(); ++i) {
      const double r = double(i) * h;
      lg_[i] = std::log(u_[i]) + r;
      lgp_[i] = du_[i] / u_[i] + 1.0;
    }
    // The tail piece starts from the Bessel tail itself, not the shooting value.
    const double R = double(match_index_) * h;
    const double k0 = std::cyl_bessel_k(0.0, R), k1 = std::cyl_bessel_k(1.0, R);
    lg_[match_index_] = std::log(tail_a_ * k0) + R;
    lgp_[match_index_] = 1.0 - k1 / k0;
    // Gauss-Legendre panels in r; weights fold in r dr and f'(u0) u0'.
    radial_nodes_.clear();
    using GL = boost::math::quadrature::gauss<double, 8>;
    const auto& xs = GL::abscissa();
    const auto& ws = GL::weights();
    const int panels = int(std::llround(opt_.disc_radius / opt_.panel));
    for (int pnl = 0; pnl < panels; ++pnl) {
      const double a = pnl * opt_.panel, b = a + opt_.panel, mid = 0.5 * (a + b), half = 0.5 * (b - a);
      for (std::size_t k = 0; k < xs.size(); ++k) {
        for (int sgn : {-1, 1}) {
          if (xs[k] == 0.0 && sgn < 0) continue;
          const double r = mid + sgn * half * xs[k];
          const ProfileSample p = profile(r);
          radial_nodes_.push_back({r, half * ws[k] * r * nl_.df(p.u) * p.du});
        }
      }
    }
  }

  void make_s_nodes() {
    s_nodes_.clear();
    const std::size_t n = std::size_t(std::llround((opt_.s_max - opt_.s_min) / opt_.s_step)) + 1;
    for (std::size_t i = 0; i < n; ++i) s_nodes_.push_back(opt_.s_min + double(i) * opt_.s_step);
  }

  void fill_upsilon() {
    make_s_nodes();
    ln_ups_.resize(s_nodes_.size());
    dln_ups_.resize(s_nodes_.size());
    for (std::size_t i = 0; i < s_nodes_.size(); ++i) {
      const UpsilonSample v = upsilon_quadrature(s_nodes_[i]);
      if (!(v.value > 0.0)) throw SolverError("interaction function not positive on the table range");
      ln_ups_[i] = std::log(v.value);
      dln_ups_[i] = v.derivative / v.value;
    }
  }

  void finish_upsilon() {
    make_s_nodes();
    // Longest run of decreasing samples ending at the table end.
    std::size_t i = s_nodes_.size() - 1;
    while (i > 0 && dln_ups_[i - 1] < 0.0) --i;
    mono_lo_ = s_nodes_[i];
    mono_hi_ = s_nodes_.back();
    double acc = 0.0;
    int cnt = 0;
    for (std::size_t k = 0; k < s_nodes_.size(); ++k) {
      const double s = s_nodes_[k];
      if (s >= 15.0 && s <= 25.0) {
        acc += -ln_ups_[k] - s - 0.5 * std::log(s);
        ++cnt;
      }
    }
    c_fit_ = cnt ? acc / cnt : std::numeric_limits<double>::quiet_NaN();
  }

  std::array<double, 2> log_upsilon_sample(double s) const {
    if (ln_ups_.empty()) throw DomainError("interaction table has no upsilon samples");
    if (!(s >= opt_.s_min)) throw DomainError("upsilon requested below the tabulated range");
    const double smax = s_nodes_.back();
    if (s >= smax) {
      // Leading asymptotics beyond the table.
      const double l = ln_ups_.back() - (s - smax) - 0.5 * std::log(s / smax);
      const double d = -1.0 - 0.5 / s;
      return {l, d};
    }
    const std::size_t i = std::min(std::size_t((s - opt_.s_min) / opt_.s_step), s_nodes_.size() - 2);
    const double t = (s - s_nodes_[i]) / opt_.s_step;
    const auto v = detail::cubic_hermite(t, opt_.s_step, ln_ups_[i], dln_ups_[i], ln_ups_[i + 1], dln_ups_[i + 1]);
    return {v[0], v[1]};
  }
};

inline InteractionTable ground_state(const Nonlinearity& nl, TableOptions opt = {}) {
  opt.with_upsilon = false;
  return InteractionTable::build(nl, opt);
}

inline double upsilon(const InteractionTable& t, double s) { return t.upsilon(s); }
inline double alpha_ell(const InteractionTable& t, double a, double ell) { return t.alpha(a, ell); }
inline double c_star(const InteractionTable& t) { return t.c_star(); }

// Shared cubic table, loaded through the cache directory when one is configured.
inline const InteractionTable& default_table() {
  static const InteractionTable t = InteractionTable::load_or_build(Nonlinearity{});
  return t;
}

}  // namespace netforge
