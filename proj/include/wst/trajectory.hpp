// Copyright 2026 The wst-lspg Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WST_TRAJECTORY_HPP_
#define WST_TRAJECTORY_HPP_

#include <cmath>

#include "wst/densekit.hpp"

namespace wst
{

/// Space-time state history. Column n of `states` holds u at step n+1; the
/// initial condition is kept separately.
struct Trajectory
{
    double dt = 0.0;
    Vector initial;
    Matrix states;

    Trajectory() = default;
    Trajectory(Vector u0, Index n_time, double step) : dt(step), initial(std::move(u0))
    {
        states = Matrix::Zero(initial.size(), n_time);
    }

    Index n_space() const { return initial.size(); }
    Index n_time() const { return states.cols(); }
    double final_time() const { return dt * static_cast<double>(n_time()); }

    /// State at global step n; n = 0 is the initial condition.
    Vector state(Index n) const
    {
        if (n < 0 || n > n_time())
            throw Error("trajectory step " + std::to_string(n) + " out of range [0, " + std::to_string(n_time()) + "]");
        return n == 0 ? initial : Vector(states.col(n - 1));
    }

    /// Block of states for steps first..first+count-1 (1-based steps).
    Matrix block(Index first, Index count) const
    {
        if (first < 1 || first + count - 1 > n_time())
            throw Error("trajectory block [" + std::to_string(first) + ", " + std::to_string(first + count - 1) +
                        "] exceeds " + std::to_string(n_time()) + " steps");
        return states.middleCols(first - 1, count);
    }

    void validate() const
    {
        if (states.rows() != initial.size())
            throw Error("trajectory: states have " + std::to_string(states.rows()) + " rows, initial has " +
                        std::to_string(initial.size()));
        if (!initial.allFinite() || !states.allFinite())
            throw Error("trajectory: non-finite state entries");
    }
};

}  // namespace wst

#endif  // WST_TRAJECTORY_HPP_
