// Copyright 2026 The wst-lspg Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WST_METRICS_HPP_
#define WST_METRICS_HPP_

#include <cmath>
#include <string>

#include "wst/burgers.hpp"
#include "wst/trajectory.hpp"
#include "wst/windows.hpp"

namespace wst
{

/// Accuracy and cost of one online solve against its FOM.
struct ErrorReport
{
    double mse = 0.0;
    double imse = 0.0;
    double residual_l2 = 0.0;
    double wall_time_rom = 0.0;
    double wall_time_fom = 0.0;
    double relative_wall_time = 0.0;
};

namespace detail
{

inline void require_same_shape(const Trajectory& a, const Trajectory& b, const char* what)
{
    if (a.n_space() != b.n_space() || a.n_time() != b.n_time())
        throw Error(std::string(what) + ": trajectories have shapes " + dims(a.n_space(), a.n_time()) + " and " +
                    dims(b.n_space(), b.n_time()));
}

}  // namespace detail

/// Relative space-time error over steps 1..N_t (the initial condition is
/// excluded).
inline double mse(const Trajectory& rom, const Trajectory& fom)
{
    detail::require_same_shape(rom, fom, "mse");
    const double den = fom.states.norm();
    if (den == 0.0)
        throw Error("mse: reference trajectory is identically zero");
    return (rom.states - fom.states).norm() / den;
}

/// Relative error of the rectangle-rule time integrals, one per cell.
inline double imse(const Trajectory& rom, const Trajectory& fom, double dt)
{
    detail::require_same_shape(rom, fom, "imse");
    const Vector int_fom = fom.states.rowwise().sum() * dt;
    const Vector int_rom = rom.states.rowwise().sum() * dt;
    const double den = int_fom.norm();
    if (den == 0.0)
        throw Error("imse: reference time integral is identically zero");
    return (int_rom - int_fom).norm() / den;
}

/// Space-time residual norm of a trajectory: the window residuals of `plan`
/// stacked. Windows partition the steps, so any plan with the same scheme
/// restarts gives the global residual.
template <Model M>
double residual_l2(const M& model, const Trajectory& traj, const WindowPlan& plan)
{
    return trajectory_residual_l2(model, traj, plan);
}

inline double residual_l2(const Trajectory& traj, const Parameters& p, const WindowPlan& plan,
                          const SpatialGrid& grid = SpatialGrid())
{
    return trajectory_residual_l2(BurgersModel(grid, p), traj, plan);
}

}  // namespace wst

#endif  // WST_METRICS_HPP_
