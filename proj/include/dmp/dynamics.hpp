#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "dmp/tape.hpp"

namespace dmp {

// Everything here is templated on the scalar type: T = double for plain
// simulation and reporting, T = Value for differentiable rollouts.

template <class T>
struct VehicleState {
  T x;
  T y;
  T v;
  T h;  // heading, kept in (-pi, pi]
};

template <class T>
struct Control {
  T accel;
  T heading_rate;
};

template <class T>
struct Trajectory {
  std::vector<VehicleState<T>> states;  // length horizon+1, states[0] = initial
};

// Unicycle kinematics, semi-implicit: the updated heading and velocity drive
// the displacement of this step. Negative velocity (reversing) is allowed.
template <class T>
VehicleState<T> step(const VehicleState<T>& s, const Control<T>& u, double dt) {
  using std::cos;
  using std::sin;
  const T h = wrap_angle(s.h + u.heading_rate * dt);
  const T v = s.v + u.accel * dt;
  const T x = s.x + v * cos(h) * dt;
  const T y = s.y + v * sin(h) * dt;
  return VehicleState<T>{x, y, v, h};
}

// Maps raw network outputs in [-1, 1] onto the control constraints.
template <class T>
std::vector<Control<T>> scale_controls(const std::vector<std::array<T, 2>>& raw,
                                       double a_max, double heading_rate_max) {
  std::vector<Control<T>> out;
  out.reserve(raw.size());
  for (std::size_t t = 0; t < raw.size(); ++t) {
    const double ra = val(raw[t][0]);
    const double rh = val(raw[t][1]);
    if (std::abs(ra) > 1.0 + 1e-9 || std::abs(rh) > 1.0 + 1e-9) {
      throw std::invalid_argument("scale_controls: raw control outside [-1, 1] at step " +
                                  std::to_string(t));
    }
    out.push_back(Control<T>{raw[t][0] * a_max, raw[t][1] * heading_rate_max});
  }
  return out;
}

template <class T>
Trajectory<T> rollout(const VehicleState<T>& s0, const std::vector<Control<T>>& controls,
                      double dt) {
  Trajectory<T> traj;
  traj.states.reserve(controls.size() + 1);
  traj.states.push_back(s0);
  for (const auto& u : controls) {
    traj.states.push_back(step(traj.states.back(), u, dt));
  }
  return traj;
}

}  // namespace dmp
