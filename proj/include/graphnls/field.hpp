#pragma once

#include "grid.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace graphnls {

/// Relative tolerance applied to the shared vertex value when ingesting
/// fields from external sources.
inline constexpr double kVertexContinuityTol = 1e-10;

/// Complex samples on every edge of a star graph.  State fields share one
/// vertex value (sample 0 of every edge); derivative fields drop that
/// constraint, since edge derivatives may differ at the vertex.
struct GraphField {
  StarGraphGrid grid;
  std::vector<std::vector<cplx>> edges;  // [n_edges][n_points]
  bool vertex_coupled = true;

  GraphField() = default;
  explicit GraphField(const StarGraphGrid& g)
      : grid(g), edges(g.n_edges, std::vector<cplx>(g.n_points, cplx{0.0, 0.0})) {}

  /// Sample the same function of x on every edge.
  template <class F>
  static GraphField sample(const StarGraphGrid& g, F&& f) {
    GraphField u(g);
    for (int i = 0; i < g.n_points; ++i) {
      cplx v = cplx(f(g.x(i)));
      for (auto& e : u.edges) e[i] = v;
    }
    return u;
  }

  /// Sample a per-edge function f(j, x).
  template <class F>
  static GraphField sample_edges(const StarGraphGrid& g, F&& f) {
    GraphField u(g);
    for (int j = 0; j < g.n_edges; ++j)
      for (int i = 0; i < g.n_points; ++i) u.edges[j][i] = cplx(f(j, g.x(i)));
    // keep the stored vertex value bit-identical across edges
    for (int j = 1; j < g.n_edges; ++j) u.edges[j][0] = u.edges[0][0];
    return u;
  }

  cplx vertex() const { return edges[0][0]; }
  void set_vertex(cplx v) {
    for (auto& e : edges) e[0] = v;
  }

  double max_vertex_mismatch() const {
    double m = 0.0;
    for (const auto& e : edges) m = std::max(m, std::abs(e[0] - edges[0][0]));
    return m;
  }

  bool all_finite() const {
    for (const auto& e : edges)
      for (const cplx& v : e)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }
};

/// Complex samples on the line split at the origin.  left[i] = u(-i*h) and
/// right[i] = u(+i*h); the two origin traces left[0], right[0] are
/// independent, so a jump at 0 is representable.
struct LineField {
  int n_points = 3;
  double h = 1.0;
  std::vector<cplx> left, right;

  LineField() = default;
  LineField(int M, double L)
      : n_points(M), h(L / (M - 1)), left(M, cplx{0, 0}), right(M, cplx{0, 0}) {
    if (M < 3) throw std::invalid_argument("LineField: at least 3 points per side required");
    if (!(L > 0.0)) throw std::invalid_argument("LineField: length must be positive");
  }

  template <class F>
  static LineField sample(int M, double L, F&& f) {
    LineField u(M, L);
    for (int i = 0; i < M; ++i) {
      double x = i * u.h;
      u.right[i] = cplx(f(x));
      u.left[i] = cplx(f(-x));
    }
    return u;
  }

  double length() const { return h * (n_points - 1); }
  double x(int i) const { return h * i; }
  cplx jump() const { return right[0] - left[0]; }

  bool all_finite() const {
    for (const cplx& v : left)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    for (const cplx& v : right)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }
};

/// Values of the conserved/variational quantities of one field.
struct FunctionalReport {
  double mass = 0.0;         // ||V||_2^2
  double energy = 0.0;       // E
  double action = 0.0;       // S_omega
  double nehari = 0.0;       // I_omega
  double virial_p = 0.0;     // P
  double vertex_abs2 = 0.0;  // |v_1(0)|^2, or |v(0+)-v(0-)|^2 on the split line
};

namespace detail {

template <class Field>
struct FieldTraits;

template <>
struct FieldTraits<GraphField> {
  static int parts(const GraphField& u) { return u.grid.n_edges; }
  static const std::vector<cplx>& part(const GraphField& u, int j) { return u.edges[j]; }
  static double spacing(const GraphField& u) { return u.grid.h; }
  static int points(const GraphField& u) { return u.grid.n_points; }
};

template <>
struct FieldTraits<LineField> {
  static int parts(const LineField&) { return 2; }
  static const std::vector<cplx>& part(const LineField& u, int j) { return j == 0 ? u.left : u.right; }
  static double spacing(const LineField& u) { return u.h; }
  static int points(const LineField& u) { return u.n_points; }
};

template <class Field, class F>
double integrate_pointwise(const Field& u, QuadRule rule, F&& f) {
  using T = FieldTraits<Field>;
  const double h = T::spacing(u);
  const int M = T::points(u);
  double total = 0.0;
  for (int j = 0; j < T::parts(u); ++j) {
    const auto& e = T::part(u, j);
    total += panel_integral(M, h, rule, [&](int i) { return f(e[i], h * i); });
  }
  return total;
}

}  // namespace detail

/// Edge-summed integral of the real part of the field.
template <class Field>
double quadrature(const Field& u, QuadRule rule = QuadRule::trapezoid) {
  return detail::integrate_pointwise(u, rule, [](cplx v, double) { return v.real(); });
}

/// ||u||_2^2 = edge-summed integral of |u|^2.
template <class Field>
double mass(const Field& u, QuadRule rule = QuadRule::trapezoid) {
  return detail::integrate_pointwise(u, rule, [](cplx v, double) { return std::norm(v); });
}

/// Edge-summed integral of |u|^q.
template <class Field>
double lp_norm_pow(const Field& u, double q, QuadRule rule = QuadRule::trapezoid) {
  if (q < 1.0) throw std::invalid_argument("lp_norm: exponent q must be >= 1");
  if (q == 2.0) return mass(u, rule);
  const double half_q = 0.5 * q;
  return detail::integrate_pointwise(
      u, rule, [half_q](cplx v, double) { return std::pow(std::norm(v), half_q); });
}

template <class Field>
double lp_norm(const Field& u, double q, QuadRule rule = QuadRule::trapezoid) {
  return std::pow(lp_norm_pow(u, q, rule), 1.0 / q);
}

/// Integral of x^2 |u|^2, the virial weight.
template <class Field>
double weighted_l2_x(const Field& u, QuadRule rule = QuadRule::trapezoid) {
  return detail::integrate_pointwise(u, rule, [](cplx v, double x) { return x * x * std::norm(v); });
}

/// Mass sitting beyond `fraction` of the truncated edge length; gauges how
/// much the domain truncation pollutes x^2-weighted monitors.
template <class Field>
double tail_mass(const Field& u, double fraction = 0.8, QuadRule rule = QuadRule::trapezoid) {
  using T = detail::FieldTraits<Field>;
  const double cut = fraction * T::spacing(u) * (T::points(u) - 1);
  return detail::integrate_pointwise(
      u, rule, [cut](cplx v, double x) { return x >= cut ? std::norm(v) : 0.0; });
}

template <class Field>
double sup_abs(const Field& u) {
  using T = detail::FieldTraits<Field>;
  double m = 0.0;
  for (int j = 0; j < T::parts(u); ++j)
    for (const cplx& v : T::part(u, j)) m = std::max(m, std::abs(v));
  return m;
}

/// First derivative per edge, second order everywhere.  The result is not
/// vertex-coupled.
inline GraphField derivative(const GraphField& u) {
  GraphField d(u.grid);
  d.vertex_coupled = false;
  for (int j = 0; j < u.grid.n_edges; ++j) detail::panel_derivative(u.edges[j], u.grid.h, d.edges[j]);
  return d;
}

/// Derivative with respect to the line coordinate, so out.left[0] is the
/// one-sided derivative at 0- and out.right[0] the one at 0+.
inline LineField derivative(const LineField& u) {
  LineField d(u.n_points, u.length());
  detail::panel_derivative(u.right, u.h, d.right);
  detail::panel_derivative(u.left, u.h, d.left);
  for (cplx& v : d.left) v = -v;  // left side is stored against -x
  return d;
}

template <class Field>
double h1_norm_sq(const Field& u) {
  return mass(u) + mass(derivative(u));
}

template <class Field>
double h1_norm(const Field& u) {
  return std::sqrt(h1_norm_sq(u));
}

// ---------------------------------------------------------------------------
// Snapshot files
// ---------------------------------------------------------------------------
//
// Graph field:  "# graphfield N=<n> M=<m> h=<h>"
//               then M rows "x re(u_1) im(u_1) ... re(u_N) im(u_N)".
// Line field:   "# linefield M=<m> h=<h>"
//               then M rows "x re(u(-x)) im(u(-x)) re(u(+x)) im(u(+x))".
// All numbers carry 17 significant digits.

inline void write_snapshot(const GraphField& u, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw std::runtime_error("write_snapshot: cannot open " + path);
  std::fprintf(fp, "# graphfield N=%d M=%d h=%.17g\n", u.grid.n_edges, u.grid.n_points, u.grid.h);
  for (int i = 0; i < u.grid.n_points; ++i) {
    std::fprintf(fp, "%.17g", u.grid.x(i));
    for (int j = 0; j < u.grid.n_edges; ++j)
      std::fprintf(fp, " %.17g %.17g", u.edges[j][i].real(), u.edges[j][i].imag());
    std::fputc('\n', fp);
  }
  std::fclose(fp);
}

inline void write_snapshot(const LineField& u, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw std::runtime_error("write_snapshot: cannot open " + path);
  std::fprintf(fp, "# linefield M=%d h=%.17g\n", u.n_points, u.h);
  for (int i = 0; i < u.n_points; ++i)
    std::fprintf(fp, "%.17g %.17g %.17g %.17g %.17g\n", u.x(i), u.left[i].real(), u.left[i].imag(),
                 u.right[i].real(), u.right[i].imag());
  std::fclose(fp);
}

namespace detail {

inline std::string snapshot_kind(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("snapshot: cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("# graphfield", 0) == 0) return "graphfield";
  if (line.rfind("# linefield", 0) == 0) return "linefield";
  throw std::runtime_error("snapshot: unrecognized header in " + path);
}

inline long header_value(const std::string& header, const std::string& key, double* out_real) {
  auto pos = header.find(key + "=");
  if (pos == std::string::npos) throw std::runtime_error("snapshot: missing header field " + key);
  const char* s = header.c_str() + pos + key.size() + 1;
  if (out_real) {
    *out_real = std::strtod(s, nullptr);
    return 0;
  }
  return std::strtol(s, nullptr, 10);
}

}  // namespace detail

inline GraphField read_graph_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_graph_snapshot: cannot open " + path);
  std::string header;
  std::getline(in, header);
  if (header.rfind("# graphfield", 0) != 0)
    throw std::runtime_error("read_graph_snapshot: not a graphfield snapshot: " + path);
  const int N = static_cast<int>(detail::header_value(header, "N", nullptr));
  const int M = static_cast<int>(detail::header_value(header, "M", nullptr));
  double h = 0.0;
  detail::header_value(header, "h", &h);
  if (N < 1 || M < 3 || !(h > 0.0)) throw std::runtime_error("read_graph_snapshot: bad header");

  StarGraphGrid grid;
  grid.n_edges = N;
  grid.n_points = M;
  grid.h = h;
  GraphField u(grid);
  for (int i = 0; i < M; ++i) {
    double x, re, im;
    if (!(in >> x)) throw std::runtime_error("read_graph_snapshot: truncated file");
    for (int j = 0; j < N; ++j) {
      if (!(in >> re >> im)) throw std::runtime_error("read_graph_snapshot: truncated row");
      u.edges[j][i] = cplx(re, im);
    }
  }
  if (!u.all_finite()) throw std::runtime_error("read_graph_snapshot: non-finite samples");

  const double scale = std::max(1.0, std::abs(u.edges[0][0]));
  if (u.max_vertex_mismatch() > kVertexContinuityTol * scale)
    throw std::runtime_error("read_graph_snapshot: vertex continuity violated beyond tolerance");
  cplx v{0, 0};
  for (const auto& e : u.edges) v += e[0];
  u.set_vertex(v / double(N));
  return u;
}

inline LineField read_line_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_line_snapshot: cannot open " + path);
  std::string header;
  std::getline(in, header);
  if (header.rfind("# linefield", 0) != 0)
    throw std::runtime_error("read_line_snapshot: not a linefield snapshot: " + path);
  const int M = static_cast<int>(detail::header_value(header, "M", nullptr));
  double h = 0.0;
  detail::header_value(header, "h", &h);
  if (M < 3 || !(h > 0.0)) throw std::runtime_error("read_line_snapshot: bad header");

  LineField u(M, h * (M - 1));
  for (int i = 0; i < M; ++i) {
    double x, lr, li, rr, ri;
    if (!(in >> x >> lr >> li >> rr >> ri))
      throw std::runtime_error("read_line_snapshot: truncated file");
    u.left[i] = cplx(lr, li);
    u.right[i] = cplx(rr, ri);
  }
  if (!u.all_finite()) throw std::runtime_error("read_line_snapshot: non-finite samples");
  return u;
}

}  // namespace graphnls
