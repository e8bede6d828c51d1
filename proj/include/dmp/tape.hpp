#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dmp/geometry.hpp"

namespace dmp {

// Raised when a primitive produces a non-finite value or is evaluated
// outside its domain (division by ~0, sqrt of a negative, ...).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Tape;

// Handle to one scalar node on a tape. Cheap to copy; the forward value is
// cached in the handle so arithmetic never has to chase the tape.
struct Value {
  Tape* tape = nullptr;
  std::int32_t id = -1;
  double v = 0.0;

  double val() const { return v; }
};

// Reverse-mode autodiff over a dynamically grown scalar graph.
//
// Each node records its parent indices and the local partial derivatives
// with respect to them, appended in topological order by construction.
// backward() is a single reverse sweep: grad[parent] += partial * grad[node].
// Everything is accumulated in a fixed order, so identical forward passes
// give bit-identical tapes and gradients.
//
// Dense layers go through dot_affine(), which records one node with an edge
// per operand instead of a mul/add node pair per term.
class Tape {
 public:
  Value lift(double c) {
    check_finite(c, "lift");
    return make(c, 0);
  }

  std::size_t size() const { return nodes_.size(); }

  double value(std::int32_t id) const { return values_[static_cast<std::size_t>(id)]; }

  // Drops all nodes but keeps allocated capacity for reuse across evaluations.
  void reset() {
    nodes_.clear();
    parents_.clear();
    partials_.clear();
    values_.clear();
  }

  // Gradient of `output` with respect to every node on the tape.
  std::vector<double> backward(const Value& output) const {
    std::vector<double> grad;
    backward_into(output, grad);
    return grad;
  }

  void backward_into(const Value& output, std::vector<double>& grad) const {
    if (output.tape != this) {
      throw std::invalid_argument("backward: output value belongs to a different tape");
    }
    grad.assign(nodes_.size(), 0.0);
    grad[static_cast<std::size_t>(output.id)] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      const double g = grad[i];
      if (g == 0.0) continue;
      const Node& n = nodes_[i];
      const std::size_t end = n.edge_begin + n.n_edges;
      for (std::size_t e = n.edge_begin; e < end; ++e) {
        grad[parents_[e]] += partials_[e] * g;
      }
    }
  }

  // y = b + sum_i w[i] * x[i], recorded as a single node. Partials:
  // d/dw[i] = x[i], d/dx[i] = w[i], d/db = 1.
  Value dot_affine(std::span<const Value> w, std::span<const Value> x, const Value& b) {
    if (w.size() != x.size()) {
      throw std::invalid_argument("dot_affine: operand size mismatch");
    }
    double acc = b.v;
    for (std::size_t i = 0; i < w.size(); ++i) {
      acc += w[i].v * x[i].v;
    }
    check_finite(acc, "dot_affine");
    Value out = make(acc, 2 * w.size() + 1);
    std::size_t e = nodes_.back().edge_begin;
    for (std::size_t i = 0; i < w.size(); ++i) {
      own(w[i], "dot_affine");
      own(x[i], "dot_affine");
      parents_[e] = static_cast<std::uint32_t>(w[i].id);
      partials_[e] = x[i].v;
      ++e;
      parents_[e] = static_cast<std::uint32_t>(x[i].id);
      partials_[e] = w[i].v;
      ++e;
    }
    own(b, "dot_affine");
    parents_[e] = static_cast<std::uint32_t>(b.id);
    partials_[e] = 1.0;
    return out;
  }

  Value unary(const Value& a, double value, double da, const char* op) {
    own(a, op);
    check_finite(value, op);
    Value out = make(value, 1);
    const std::size_t e = nodes_.back().edge_begin;
    parents_[e] = static_cast<std::uint32_t>(a.id);
    partials_[e] = da;
    return out;
  }

  Value binary(const Value& a, const Value& b, double value, double da, double db,
               const char* op) {
    own(a, op);
    own(b, op);
    check_finite(value, op);
    Value out = make(value, 2);
    const std::size_t e = nodes_.back().edge_begin;
    parents_[e] = static_cast<std::uint32_t>(a.id);
    partials_[e] = da;
    parents_[e + 1] = static_cast<std::uint32_t>(b.id);
    partials_[e + 1] = db;
    return out;
  }

  static void check_finite(double v, const char* op) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("autodiff: non-finite result in '") + op + "'");
    }
  }

 private:
  struct Node {
    std::uint32_t edge_begin;
    std::uint32_t n_edges;
  };

  Value make(double value, std::size_t n_edges) {
    const std::uint32_t begin = static_cast<std::uint32_t>(parents_.size());
    nodes_.push_back(Node{begin, static_cast<std::uint32_t>(n_edges)});
    parents_.resize(parents_.size() + n_edges);
    partials_.resize(partials_.size() + n_edges);
    values_.push_back(value);
    return Value{this, static_cast<std::int32_t>(nodes_.size() - 1), value};
  }

  void own(const Value& a, const char* op) const {
    if (a.tape != this) {
      throw std::invalid_argument(std::string("autodiff: '") + op +
                                  "' mixes values from different tapes");
    }
  }

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> parents_;
  std::vector<double> partials_;
  std::vector<double> values_;
};

inline std::vector<double> backward(const Tape& tape, const Value& output) {
  return tape.backward(output);
}

// ---- primitives ------------------------------------------------------------

inline Value operator+(const Value& a, const Value& b) {
  return a.tape->binary(a, b, a.v + b.v, 1.0, 1.0, "add");
}
inline Value operator+(const Value& a, double c) {
  return a.tape->unary(a, a.v + c, 1.0, "add");
}
inline Value operator+(double c, const Value& a) { return a + c; }
inline Value& operator+=(Value& a, const Value& b) { return a = a + b; }

inline Value operator-(const Value& a, const Value& b) {
  return a.tape->binary(a, b, a.v - b.v, 1.0, -1.0, "sub");
}
inline Value operator-(const Value& a, double c) {
  return a.tape->unary(a, a.v - c, 1.0, "sub");
}
inline Value operator-(double c, const Value& a) {
  return a.tape->unary(a, c - a.v, -1.0, "sub");
}
inline Value operator-(const Value& a) { return a.tape->unary(a, -a.v, -1.0, "neg"); }

inline Value operator*(const Value& a, const Value& b) {
  return a.tape->binary(a, b, a.v * b.v, b.v, a.v, "mul");
}
inline Value operator*(const Value& a, double c) {
  return a.tape->unary(a, a.v * c, c, "mul");
}
inline Value operator*(double c, const Value& a) { return a * c; }

inline Value operator/(const Value& a, const Value& b) {
  if (std::abs(b.v) <= 1e-12) {
    throw NumericError("autodiff: division by near-zero denominator in 'div'");
  }
  return a.tape->binary(a, b, a.v / b.v, 1.0 / b.v, -a.v / (b.v * b.v), "div");
}
inline Value operator/(const Value& a, double c) {
  if (std::abs(c) <= 1e-12) {
    throw NumericError("autodiff: division by near-zero denominator in 'div'");
  }
  return a.tape->unary(a, a.v / c, 1.0 / c, "div");
}
inline Value operator/(double c, const Value& a) {
  if (std::abs(a.v) <= 1e-12) {
    throw NumericError("autodiff: division by near-zero denominator in 'div'");
  }
  return a.tape->unary(a, c / a.v, -c / (a.v * a.v), "div");
}

inline Value sin(const Value& a) {
  return a.tape->unary(a, std::sin(a.v), std::cos(a.v), "sin");
}
inline Value cos(const Value& a) {
  return a.tape->unary(a, std::cos(a.v), -std::sin(a.v), "cos");
}
inline Value tanh(const Value& a) {
  const double t = std::tanh(a.v);
  return a.tape->unary(a, t, 1.0 - t * t, "tanh");
}
inline Value exp(const Value& a) {
  const double e = std::exp(a.v);
  return a.tape->unary(a, e, e, "exp");
}
inline Value sqrt(const Value& a) {
  if (a.v < 0.0) {
    throw NumericError("autodiff: negative operand in 'sqrt'");
  }
  const double s = std::sqrt(a.v);
  // Subgradient 0 at the domain boundary; the true partial diverges there.
  return a.tape->unary(a, s, a.v > 0.0 ? 0.5 / s : 0.0, "sqrt");
}
inline Value atan2(const Value& y, const Value& x) {
  const double r2 = x.v * x.v + y.v * y.v;
  if (r2 <= 1e-24) {
    throw NumericError("autodiff: both operands near zero in 'atan2'");
  }
  return y.tape->binary(y, x, std::atan2(y.v, x.v), x.v / r2, -y.v / r2, "atan2");
}

// Argmin/argmax selector is frozen at forward time; gradient flows only to
// the selected argument, ties to the first (lowest-index) one.
inline Value min(const Value& a, const Value& b) {
  const bool take_b = b.v < a.v;
  return a.tape->binary(a, b, take_b ? b.v : a.v, take_b ? 0.0 : 1.0,
                        take_b ? 1.0 : 0.0, "min");
}
inline Value max(const Value& a, const Value& b) {
  const bool take_b = b.v > a.v;
  return a.tape->binary(a, b, take_b ? b.v : a.v, take_b ? 0.0 : 1.0,
                        take_b ? 1.0 : 0.0, "max");
}
inline Value abs(const Value& a) {
  // Subgradient 0 at 0.
  const double sign = a.v > 0.0 ? 1.0 : (a.v < 0.0 ? -1.0 : 0.0);
  return a.tape->unary(a, std::abs(a.v), sign, "abs");
}

inline Value sigmoid(const Value& a) {
  const double s = 1.0 / (1.0 + std::exp(-a.v));
  return a.tape->unary(a, s, s * (1.0 - s), "sigmoid");
}

// Euclidean norm of (dx, dy) as one node. At the cone point the partials are
// taken as 0, mirroring the abs-at-0 convention.
inline Value hypot_xy(const Value& dx, const Value& dy) {
  const double d = std::sqrt(dx.v * dx.v + dy.v * dy.v);
  if (d > 1e-12) {
    return dx.tape->binary(dx, dy, d, dx.v / d, dy.v / d, "hypot");
  }
  return dx.tape->binary(dx, dy, d, 0.0, 0.0, "hypot");
}

// Wrap into (-pi, pi]; derivative 1 almost everywhere.
inline Value wrap_angle(const Value& a) {
  return a.tape->unary(a, wrap_angle(a.v), 1.0, "wrap_angle");
}

inline Value dot_affine(std::span<const Value> w, std::span<const Value> x, const Value& b) {
  return b.tape->dot_affine(w, x, b);
}

// ---- double counterparts so templated code runs on both scalar types ------

inline double val(double x) { return x; }
inline double val(const Value& x) { return x.v; }

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double hypot_xy(double dx, double dy) { return std::sqrt(dx * dx + dy * dy); }

inline double dot_affine(std::span<const double> w, std::span<const double> x, double b) {
  double acc = b;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i] * x[i];
  }
  return acc;
}

}  // namespace dmp
