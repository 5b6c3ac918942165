// Copyright 2026 The wst-lspg Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WST_FOM_HPP_
#define WST_FOM_HPP_

#include <Eigen/SparseLU>

#include <algorithm>
#include <string>
#include <vector>

#include "wst/lmm.hpp"
#include "wst/model.hpp"
#include "wst/trajectory.hpp"

namespace wst
{

/// Raised when the implicit step does not converge.
class NewtonError : public Error
{
public:
    NewtonError(Index step, double residual)
        : Error("Newton failed at step " + std::to_string(step) + " (last residual norm " + std::to_string(residual) +
                ")"),
          step_(step),
          residual_(residual)
    {
    }
    Index step() const { return step_; }
    double residual() const { return residual_; }

private:
    Index step_;
    double residual_;
};

struct NewtonOptions
{
    double rel_tol = 1e-10;
    /// Cap on the relative test, so large states still meet a fixed
    /// per-step residual.
    double abs_tol = 1e-10;
    double abs_floor = 1e-14;
    int max_iters = 30;
};

/// Implicit linear multistep march of du/dt = f(u). `restarts` lists 1-based
/// steps where the scheme restarts with BDF1 (step 1 always does). Each step
/// is solved with plain Newton on the analytic Jacobian.
template <Model M>
Trajectory march(const M& model, const Vector& u0, double dt, Index n_steps, const LmmScheme& scheme,
                 const std::vector<Index>& restarts = {}, const NewtonOptions& opt = {})
{
    if (u0.size() != model.size())
        throw Error("march: initial state has length " + std::to_string(u0.size()) + ", model has " +
                    std::to_string(model.size()));
    if (!(dt > 0.0) || n_steps < 1)
        throw Error("march: needs dt > 0 and at least one step");

    const Index n = model.size();
    Trajectory traj(u0, n_steps, dt);
    Vector f(n);
    Vector r(n);
    SparseMatrix jac;
    SparseMatrix lhs;
    SparseMatrix eye(n, n);
    eye.setIdentity();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;

    Index last_restart = 1;
    for (Index step = 1; step <= n_steps; ++step)
    {
        if (std::find(restarts.begin(), restarts.end(), step) != restarts.end())
            last_restart = step;
        const LmmStep c = scheme.at(step - last_restart);
        const Vector prev = traj.state(step - 1);

        // Known part of the residual from previous states.
        Vector known = Vector::Zero(n);
        for (int j = 1; j <= c.width; ++j)
        {
            const Vector uj = traj.state(step - j);
            known += c.alpha[static_cast<std::size_t>(j)] * uj;
            if (c.beta[static_cast<std::size_t>(j)] != 0.0)
            {
                model.velocity(uj, f);
                known -= dt * c.beta[static_cast<std::size_t>(j)] * f;
            }
        }

        Vector u = prev;
        double rnorm = 0.0;
        bool ok = false;
        for (int it = 0; it <= opt.max_iters; ++it)
        {
            model.velocity(u, f);
            r = c.alpha[0] * u - dt * c.beta[0] * f + known;
            rnorm = r.norm();
            if (!std::isfinite(rnorm))
                break;
            if (rnorm <= std::max(std::min(opt.rel_tol * u.norm(), opt.abs_tol), opt.abs_floor))
            {
                ok = true;
                break;
            }
            if (it == opt.max_iters)
                break;
            model.jacobian(u, jac);
            lhs = c.alpha[0] * eye - (dt * c.beta[0]) * jac;
            Eigen::SparseMatrix<double> lhs_cm = lhs;
            lu.compute(lhs_cm);
            if (lu.info() != Eigen::Success)
                break;
            u -= lu.solve(r);
        }
        if (!ok)
            throw NewtonError(step, rnorm);
        traj.states.col(step - 1) = u;
    }
    return traj;
}

}  // namespace wst

#endif  // WST_FOM_HPP_
