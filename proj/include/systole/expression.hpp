#pragma once

// Conformal factors from text: a small expression grammar and gridded samples.
//
// Grammar (whitespace ignored):
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := ('-' | '+') unary | power
//   power  := atom ('^' unary)?
//   atom   := number | name | name '(' expr ')' | '(' expr ')' | '|' 'z' '|'
// Names: pi, x, y (chart coordinates), r (= |z|), s1, s2, s3 (coordinates of
// the sphere point). Functions: exp, sqrt, log, sin, cos, abs, re, im; re(z),
// im(z) and abs(z) take the literal argument z.

#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "systole/conformal_metric.hpp"

namespace systole {

struct ExprPoint {
  double x, y, r, s1, s2, s3;
};

inline ExprPoint expr_point(const ChartPoint& z) {
  const Vec3 v = unproject(z).v();
  if (z.is_infinite()) {
    const double inf = std::numeric_limits<double>::infinity();
    return {inf, 0.0, inf, v.x, v.y, v.z};
  }
  const Complex c = z.value();
  return {c.real(), c.imag(), std::abs(c), v.x, v.y, v.z};
}

using ExprFn = std::function<double(const ExprPoint&)>;

class ExpressionParser {
 public:
  explicit ExpressionParser(std::string text) : s_(std::move(text)) {}

  ExprFn parse() {
    ExprFn e = expr();
    skip();
    if (pos_ != s_.size()) error("unexpected character '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorKind::config_invalid, "expression: " + what + " at offset " + std::to_string(pos_));
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) error(std::string("expected '") + c + "'");
  }

  ExprFn expr() {
    ExprFn lhs = term();
    for (;;) {
      if (accept('+')) {
        ExprFn rhs = term();
        lhs = [lhs, rhs](const ExprPoint& p) { return lhs(p) + rhs(p); };
      } else if (accept('-')) {
        ExprFn rhs = term();
        lhs = [lhs, rhs](const ExprPoint& p) { return lhs(p) - rhs(p); };
      } else {
        return lhs;
      }
    }
  }

  ExprFn term() {
    ExprFn lhs = unary();
    for (;;) {
      if (accept('*')) {
        ExprFn rhs = unary();
        lhs = [lhs, rhs](const ExprPoint& p) { return lhs(p) * rhs(p); };
      } else if (accept('/')) {
        ExprFn rhs = unary();
        lhs = [lhs, rhs](const ExprPoint& p) { return lhs(p) / rhs(p); };
      } else {
        return lhs;
      }
    }
  }

  ExprFn unary() {
    if (accept('-')) {
      ExprFn e = unary();
      return [e](const ExprPoint& p) { return -e(p); };
    }
    if (accept('+')) return unary();
    return power();
  }

  ExprFn power() {
    ExprFn base = atom();
    if (accept('^')) {
      ExprFn ex = unary();
      return [base, ex](const ExprPoint& p) { return std::pow(base(p), ex(p)); };
    }
    return base;
  }

  std::string name() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    return s_.substr(start, pos_ - start);
  }

  ExprFn atom() {
    skip();
    if (pos_ >= s_.size()) error("unexpected end of expression");
    const char c = s_[pos_];
    if (accept('(')) {
      ExprFn e = expr();
      expect(')');
      return e;
    }
    if (accept('|')) {
      if (name() != "z") error("only |z| is supported between bars");
      expect('|');
      return [](const ExprPoint& p) { return p.r; };
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s_.substr(pos_), &used);
      } catch (const std::exception&) {
        error("bad number");
      }
      pos_ += used;
      return [v](const ExprPoint&) { return v; };
    }
    const std::string id = name();
    if (id.empty()) error("unexpected character '" + std::string(1, c) + "'");
    if (id == "pi") return [](const ExprPoint&) { return kPi; };
    if (id == "x") return [](const ExprPoint& p) { return p.x; };
    if (id == "y") return [](const ExprPoint& p) { return p.y; };
    if (id == "r") return [](const ExprPoint& p) { return p.r; };
    if (id == "s1") return [](const ExprPoint& p) { return p.s1; };
    if (id == "s2") return [](const ExprPoint& p) { return p.s2; };
    if (id == "s3") return [](const ExprPoint& p) { return p.s3; };
    if (id == "re" || id == "im" || id == "abs") {
      expect('(');
      skip();
      const std::size_t save = pos_;
      if (name() == "z" && accept(')')) {
        if (id == "re") return [](const ExprPoint& p) { return p.x; };
        if (id == "im") return [](const ExprPoint& p) { return p.y; };
        return [](const ExprPoint& p) { return p.r; };
      }
      pos_ = save;
      ExprFn e = expr();
      expect(')');
      if (id == "abs") return [e](const ExprPoint& p) { return std::abs(e(p)); };
      if (id == "re") return e;
      return [](const ExprPoint&) { return 0.0; };
    }
    double (*fn)(double) = nullptr;
    if (id == "exp") fn = [](double v) { return std::exp(v); };
    else if (id == "sqrt") fn = [](double v) { return std::sqrt(v); };
    else if (id == "log") fn = [](double v) { return std::log(v); };
    else if (id == "sin") fn = [](double v) { return std::sin(v); };
    else if (id == "cos") fn = [](double v) { return std::cos(v); };
    else error("unknown name '" + id + "'");
    expect('(');
    ExprFn arg = expr();
    expect(')');
    return [fn, arg](const ExprPoint& p) { return fn(arg(p)); };
  }

  std::string s_;
  std::size_t pos_ = 0;
};

inline ExprFn parse_expression(const std::string& text) { return ExpressionParser(text).parse(); }

/// Factor from an expression. Constant expressions map to exact constant factors.
inline ConformalFactor expression_factor(const std::string& text, std::vector<Singularity> singularities = {}) {
  ExprFn fn = parse_expression(text);
  // Probe for constancy on a spread of points.
  const double v0 = fn(expr_point(Complex(0.3, 0.2)));
  bool constant = singularities.empty() && std::isfinite(v0) && v0 > 0.0;
  for (const auto& p : fibonacci_points(24)) {
    if (!constant) break;
    constant = fn(expr_point(project(p))) == v0;
  }
  if (constant) return ConformalFactor::constant(v0);
  return ConformalFactor([fn](const ChartPoint& z) { return fn(expr_point(z)); }, std::move(singularities));
}

/// Regular chart grid with bilinear interpolation; outside the grid the
/// nearest edge value is used.
struct GridSamples {
  int nx = 0, ny = 0;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  std::vector<double> values;  // row-major, y outer

  double at(double x, double y) const {
    const double u = std::clamp((x - xmin) / (xmax - xmin) * (nx - 1), 0.0, nx - 1.0);
    const double v = std::clamp((y - ymin) / (ymax - ymin) * (ny - 1), 0.0, ny - 1.0);
    const int i = std::min(static_cast<int>(u), nx - 2), j = std::min(static_cast<int>(v), ny - 2);
    const double fu = u - i, fv = v - j;
    const auto g = [&](int a, int b) { return values[static_cast<std::size_t>(b) * nx + a]; };
    return (1 - fu) * (1 - fv) * g(i, j) + fu * (1 - fv) * g(i + 1, j) + (1 - fu) * fv * g(i, j + 1) +
           fu * fv * g(i + 1, j + 1);
  }
};

/// CSV: first line "nx,ny,xmin,xmax,ymin,ymax", then ny rows of nx values.
inline GridSamples parse_grid_csv(std::istream& in) {
  GridSamples g;
  std::string line;
  const auto split = [](const std::string& l) {
    std::vector<double> out;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        out.push_back(std::stod(cell));
      } catch (const std::exception&) {
        fail(ErrorKind::config_invalid, "grid: non-numeric cell '" + cell + "'");
      }
    }
    return out;
  };
  if (!std::getline(in, line)) fail(ErrorKind::config_invalid, "grid: missing header");
  const auto h = split(line);
  if (h.size() != 6) fail(ErrorKind::config_invalid, "grid: header needs nx,ny,xmin,xmax,ymin,ymax");
  g.nx = static_cast<int>(h[0]);
  g.ny = static_cast<int>(h[1]);
  g.xmin = h[2];
  g.xmax = h[3];
  g.ymin = h[4];
  g.ymax = h[5];
  if (g.nx < 2 || g.ny < 2 || !(g.xmax > g.xmin) || !(g.ymax > g.ymin))
    fail(ErrorKind::config_invalid, "grid: degenerate header");
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    for (double v : split(line)) g.values.push_back(v);
  }
  if (g.values.size() != static_cast<std::size_t>(g.nx) * g.ny)
    fail(ErrorKind::config_invalid, "grid: expected nx*ny values");
  for (double v : g.values)
    if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::config_invalid, "grid: values must be positive");
  return g;
}

inline ConformalFactor grid_factor(GridSamples grid) {
  return ConformalFactor([grid = std::move(grid)](const ChartPoint& z) {
    if (z.is_infinite()) return grid.at(grid.xmax, grid.ymax);
    return grid.at(z.value().real(), z.value().imag());
  });
}

inline ConformalFactor grid_factor_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config_invalid, "grid: cannot open " + path);
  return grid_factor(parse_grid_csv(in));
}

}  // namespace systole
