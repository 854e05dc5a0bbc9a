#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace nhd {

/**
 * The classical fourth-order Runge-Kutta step for y' = f(t, y).
 *
 * State only needs to support addition and scaling by double, which covers
 * Eigen matrices and vectors.
 */
template <class State, class Rhs>
State rk4_step(const State &y, double t, double dt, Rhs &&f) {
    const State k1 = f(t, y);
    const State k2 = f(t + 0.5 * dt, State(y + (0.5 * dt) * k1));
    const State k3 = f(t + 0.5 * dt, State(y + (0.5 * dt) * k2));
    const State k4 = f(t + dt, State(y + dt * k3));
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Advance from t0 to t1 in equal steps no longer than max_step.
template <class State, class Rhs, class Post>
State rk4_advance(State y, double t0, double t1, double max_step, Rhs &&f, Post &&post) {
    const double span = t1 - t0;
    if (span == 0.0) {
        return y;
    }
    const auto n = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(std::abs(span) / max_step - 1e-9)));
    const double dt = span / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        y = rk4_step(y, t0 + static_cast<double>(i) * dt, dt, f);
        post(y);
    }
    return y;
}

} // namespace nhd
