// Copyright 2026 The wst-lspg Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WST_SOLVER_HPP_
#define WST_SOLVER_HPP_

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wst/densekit.hpp"
#include "wst/subspaces.hpp"
#include "wst/windows.hpp"

namespace wst
{

enum class LineSearch
{
    unit_step,    // lambda = 1, falling back to backtracking when the residual grows
    backtracking  // Armijo backtracking from lambda = 1
};

inline LineSearch parse_line_search(const std::string& s)
{
    if (s == "unit_step" || s == "unit")
        return LineSearch::unit_step;
    if (s == "backtracking")
        return LineSearch::backtracking;
    throw Error("unknown line search '" + s + "' (expected unit_step or backtracking)");
}

struct GaussNewtonConfig
{
    double tol = 1e-6;
    int max_iters = 50;
    LineSearch line_search = LineSearch::unit_step;
    double shrink = 0.5;
    double sufficient_decrease = 1e-4;
    int max_trials = 20;
    /// Keep the unweighted residual of every evaluated iterate.
    bool record_residuals = false;
    /// Stop the window loop on the first non-converged window.
    bool abort_on_divergence = true;

    void validate() const
    {
        if (!(tol > 0.0))
            throw Error("GaussNewtonConfig: tol must be positive");
        if (max_iters < 1)
            throw Error("GaussNewtonConfig: max_iters must be at least 1");
        if (!(shrink > 0.0 && shrink < 1.0) || max_trials < 1)
            throw Error("GaussNewtonConfig: invalid backtracking parameters");
    }
};

struct WindowSolveReport
{
    Index window = 0;
    int iterations = 0;
    std::vector<double> gradient_norms;
    std::vector<double> residual_norms;
    std::vector<double> step_norms;
    std::vector<double> lambdas;
    double final_residual_norm = 0.0;
    bool converged = false;
    /// One column per evaluated iterate (unweighted space-time residual).
    Matrix residual_snapshots;
    /// Iterates y_0, y_1, ... (kept for equivalence checks).
    std::vector<Vector> iterates;
};

/// Sampled-row weighting W v = op * v(rows).
struct GnatWeights
{
    std::vector<Index> rows;
    Matrix op;

    Vector apply(const Vector& v) const
    {
        Vector s(static_cast<Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i)
            s(static_cast<Index>(i)) = v(rows[i]);
        return op * s;
    }

    Matrix apply(const Matrix& m) const
    {
        Matrix s(static_cast<Index>(rows.size()), m.cols());
        for (std::size_t i = 0; i < rows.size(); ++i)
            s.row(static_cast<Index>(i)) = m.row(rows[i]);
        return op * s;
    }
};

/// Replicates the incoming state over n_steps steps (time-major).
inline Vector window_reference_state(const Vector& incoming, Index n_steps)
{
    return incoming.replicate(n_steps, 1);
}

/// reference + Pi y, unvectorized to N_s x N_t.
template <class Basis>
Matrix reconstruct_state(const Basis& basis, const Vector& incoming, const Vector& y)
{
    const Vector v = basis.apply(y);
    Matrix out = Eigen::Map<const Matrix>(v.data(), basis.n_space(), basis.n_steps());
    out.colwise() += incoming;
    return out;
}

/// Residual/Jacobian of one window over the full space-time mesh,
/// optionally followed by a sampled weighting.
template <Model M, class Basis>
class FullWindowEvaluator
{
public:
    FullWindowEvaluator(const M& model, const WindowPlan& plan, Index k, const Basis& basis, Vector incoming,
                        const GnatWeights* weights = nullptr)
        : model_(model), plan_(plan), k_(k), basis_(basis), incoming_(std::move(incoming)), weights_(weights)
    {
    }

    Index cols() const { return basis_.cols(); }

    void evaluate(const Vector& y, Vector& r, Matrix* jac)
    {
        const Matrix states = reconstruct_state(basis_, incoming_, y);
        full_ = assemble_window_residual(model_, states, incoming_, plan_, k_);
        if (jac)
            assemble_window_jacobian(model_, states, plan_, k_, basis_, *jac);
        if (weights_)
        {
            r = weights_->apply(full_);
            if (jac)
                *jac = weights_->apply(*jac);
        }
        else
            r = full_;
    }

    const Vector& full_residual() const { return full_; }
    Matrix states(const Vector& y) const { return reconstruct_state(basis_, incoming_, y); }

private:
    const M& model_;
    const WindowPlan& plan_;
    Index k_;
    const Basis& basis_;
    Vector incoming_;
    const GnatWeights* weights_;
    Vector full_;
};

namespace detail
{

template <class Eval>
void record_full_residual(Eval& ev, const Vector& r, std::vector<Vector>& snaps)
{
    if constexpr (requires { ev.full_residual(); })
        snaps.push_back(ev.full_residual());
    else
        snaps.push_back(r);
}

}  // namespace detail

/// Gauss-Newton minimization of ||r(y)|| over the reduced coordinates.
/// The evaluator returns the (already weighted) residual and Jacobian.
template <class Eval>
Vector gauss_newton(Eval& ev, Vector y, const GaussNewtonConfig& cfg, WindowSolveReport& rep)
{
    cfg.validate();
    if (y.size() != ev.cols())
        throw Error("gauss_newton: window " + std::to_string(rep.window) + " guess has length " +
                    std::to_string(y.size()) + ", basis has " + std::to_string(ev.cols()) + " columns");
    Vector r;
    Vector rt;
    Matrix jac;
    double g0 = 0.0;
    double p_norm = 0.0;
    std::vector<Vector> snaps;
    rep.converged = false;
    rep.iterates.push_back(y);
    for (int it = 0;; ++it)
    {
        ev.evaluate(y, r, &jac);
        if (cfg.record_residuals)
            detail::record_full_residual(ev, r, snaps);
        const Vector grad = jac.transpose() * r;
        const double g = grad.norm();
        const double rn = r.norm();
        if (!std::isfinite(g) || !std::isfinite(rn))
            throw Error("gauss_newton: non-finite residual in window " + std::to_string(rep.window));
        if (it == 0)
            g0 = g;
        rep.gradient_norms.push_back(g);
        rep.residual_norms.push_back(rn);
        rep.final_residual_norm = rn;
        rep.iterations = it + 1;
        if ((it > 0 && g < cfg.tol * g0) || (g < cfg.tol && p_norm < cfg.tol))
        {
            rep.converged = true;
            break;
        }
        if (it + 1 >= cfg.max_iters)
            break;

        if (jac.rows() < jac.cols())
            throw Error("gauss_newton: window " + std::to_string(rep.window) + " has fewer residual rows (" +
                        std::to_string(jac.rows()) + ") than unknowns (" + std::to_string(jac.cols()) + ")");
        const LeastSquaresResult ls = qr_least_squares_inplace(jac, -r);
        if (ls.rank_deficient)
            throw Error("gauss_newton: rank-deficient Jacobian in window " + std::to_string(rep.window));
        const Vector& p = ls.x;
        const double slope = grad.dot(p);
        const double r2 = rn * rn;

        double lambda = 1.0;
        ev.evaluate(y + p, rt, nullptr);
        bool accepted = false;
        if (cfg.line_search == LineSearch::unit_step && rt.norm() <= rn * (1.0 + 1e-10))
            accepted = true;
        if (!accepted)
        {
            for (int trial = 0; trial < cfg.max_trials; ++trial)
            {
                if (trial > 0)
                    ev.evaluate(y + lambda * p, rt, nullptr);
                if (rt.squaredNorm() <= r2 + 2.0 * cfg.sufficient_decrease * lambda * slope + 1e-12 * r2)
                {
                    accepted = true;
                    break;
                }
                lambda *= cfg.shrink;
            }
        }
        if (!accepted)
            break;
        y += lambda * p;
        p_norm = lambda * p.norm();
        rep.step_norms.push_back(p_norm);
        rep.lambdas.push_back(lambda);
        rep.iterates.push_back(y);
    }
    if (cfg.record_residuals && !snaps.empty())
    {
        rep.residual_snapshots.resize(snaps.front().size(), static_cast<Index>(snaps.size()));
        for (std::size_t c = 0; c < snaps.size(); ++c)
            rep.residual_snapshots.col(static_cast<Index>(c)) = snaps[c];
    }
    return y;
}

/// Output of an online solve.
struct RomSolution
{
    std::vector<Vector> coords;
    Trajectory trajectory;
    std::vector<WindowSolveReport> reports;
    bool converged = true;
    double seconds = 0.0;
};

/// Raised when a window does not converge and the config asks to abort.
class DivergenceError : public Error
{
public:
    DivergenceError(Index window, RomSolution partial)
        : Error("Gauss-Newton did not converge in window " + std::to_string(window)), window_(window),
          partial_(std::move(partial))
    {
    }
    Index window() const { return window_; }
    const RomSolution& partial() const { return partial_; }

private:
    Index window_;
    RomSolution partial_;
};

using GuessFn = std::function<Vector(Index)>;

/// Sequential window loop shared by the unweighted and hyper-reduced solves.
/// make_eval(k, incoming) returns the evaluator of window k.
template <class Basis, class MakeEval>
RomSolution window_loop(const std::vector<Basis>& bases, const WindowPlan& plan, const Vector& u0,
                        const GuessFn& guess, const GaussNewtonConfig& cfg, MakeEval&& make_eval)
{
    if (static_cast<Index>(bases.size()) != plan.n_windows())
        throw Error("solve: " + std::to_string(bases.size()) + " window bases for " +
                    std::to_string(plan.n_windows()) + " windows");
    const auto t0 = std::chrono::steady_clock::now();
    RomSolution sol;
    sol.trajectory = Trajectory(u0, plan.n_time(), plan.dt());
    Vector incoming = u0;
    for (Index k = 0; k < plan.n_windows(); ++k)
    {
        const Basis& basis = bases[static_cast<std::size_t>(k)];
        if (basis.n_steps() != plan.window_steps(k) || basis.n_space() != u0.size())
            throw Error("solve: basis of window " + std::to_string(k) + " does not match the plan");
        Vector y0 = guess ? guess(k) : Vector::Zero(basis.cols());
        WindowSolveReport rep;
        rep.window = k;
        auto ev = make_eval(k, incoming);
        Vector y;
        try
        {
            y = gauss_newton(ev, std::move(y0), cfg, rep);
        }
        catch (const DivergenceError&)
        {
            throw;
        }
        catch (const Error& e)
        {
            throw Error(std::string(e.what()) + " (window " + std::to_string(k) + ")");
        }
        const Matrix block = reconstruct_state(basis, incoming, y);
        sol.trajectory.states.middleCols(plan.phi(k) - 1, block.cols()) = block;
        incoming = block.col(block.cols() - 1);
        sol.coords.push_back(std::move(y));
        const bool ok = rep.converged;
        sol.reports.push_back(std::move(rep));
        if (!ok)
        {
            sol.converged = false;
            if (cfg.abort_on_divergence)
            {
                sol.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                throw DivergenceError(k, std::move(sol));
            }
        }
    }
    sol.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sol;
}

/// WST-LSPG online solve. `weights`, when given, holds one weighting per
/// window applied to the full residual.
template <Model M, class Basis>
RomSolution solve_wst_lspg(const M& model, const std::vector<Basis>& bases, const WindowPlan& plan, const Vector& u0,
                           const GuessFn& guess, const GaussNewtonConfig& cfg,
                           const std::vector<GnatWeights>* weights = nullptr)
{
    if (weights && static_cast<Index>(weights->size()) != plan.n_windows())
        throw Error("solve_wst_lspg: weights do not cover every window");
    return window_loop(bases, plan, u0, guess, cfg, [&](Index k, const Vector& incoming) {
        const GnatWeights* w = weights ? &(*weights)[static_cast<std::size_t>(k)] : nullptr;
        return FullWindowEvaluator<M, Basis>(model, plan, k, bases[static_cast<std::size_t>(k)], incoming, w);
    });
}

/// Guess provider backed by the regression model.
inline GuessFn regression_guess(const InitialGuessModel& m, const Parameters& p)
{
    return [&m, p](Index k) { return m.predict(p, k); };
}

/// Stand-alone single-window space-time LSPG solve with a dense basis and a
/// dense dr/du. It shares no assembly code with the windowed path and serves
/// as the reference it must reproduce when there is one window.
template <Model M>
WindowSolveReport solve_st_lspg_dense(const M& model, const Matrix& basis, const Vector& u0, double dt,
                                      Index n_steps, const LmmScheme& scheme, Vector y, const GaussNewtonConfig& cfg)
{
    const Index ns = model.size();
    const Index n = ns * n_steps;
    if (basis.rows() != n)
        throw Error("solve_st_lspg_dense: basis has " + std::to_string(basis.rows()) + " rows, expected " +
                    std::to_string(n));
    WindowSolveReport rep;
    rep.iterates.push_back(y);
    double g0 = 0.0;
    double p_norm = 0.0;
    const Vector ref = u0.replicate(n_steps, 1);

    auto residual = [&](const Vector& v, Vector& r, Matrix* drdu) {
        r.resize(n);
        if (drdu)
            drdu->setZero(n, n);
        Vector f(ns);
        SparseMatrix jf;
        for (Index j = 0; j < n_steps; ++j)
        {
            const LmmStep c = scheme.at(j);
            Vector rj = Vector::Zero(ns);
            for (int i = 0; i <= c.width; ++i)
            {
                const Index src = j - i;
                const Vector us = src >= 0 ? Vector(v.segment(src * ns, ns)) : u0;
                const double a = c.alpha[static_cast<std::size_t>(i)];
                const double b = c.beta[static_cast<std::size_t>(i)];
                rj += a * us;
                if (b != 0.0)
                {
                    model.velocity(us, f);
                    rj -= dt * b * f;
                }
                if (drdu && src >= 0)
                {
                    Matrix blk = a * Matrix::Identity(ns, ns);
                    if (b != 0.0)
                    {
                        model.jacobian(us, jf);
                        blk -= dt * b * Matrix(jf);
                    }
                    drdu->block(j * ns, src * ns, ns, ns) += blk;
                }
            }
            r.segment(j * ns, ns) = rj;
        }
    };

    Vector r;
    Vector rt;
    Matrix drdu;
    for (int it = 0;; ++it)
    {
        residual(ref + basis * y, r, &drdu);
        Matrix jac = drdu * basis;
        const Vector grad = jac.transpose() * r;
        const double g = grad.norm();
        if (it == 0)
            g0 = g;
        rep.gradient_norms.push_back(g);
        rep.residual_norms.push_back(r.norm());
        rep.final_residual_norm = r.norm();
        rep.iterations = it + 1;
        if ((it > 0 && g < cfg.tol * g0) || (g < cfg.tol && p_norm < cfg.tol))
        {
            rep.converged = true;
            break;
        }
        if (it + 1 >= cfg.max_iters)
            break;
        const QrResult qr = thin_qr(jac);
        if (!qr.full_rank())
            throw Error("solve_st_lspg_dense: rank-deficient Jacobian");
        const Vector p = qr.R.triangularView<Eigen::Upper>().solve(-(qr.Q.transpose() * r));
        double lambda = 1.0;
        residual(ref + basis * (y + p), rt, nullptr);
        bool accepted = cfg.line_search == LineSearch::unit_step && rt.norm() <= r.norm() * (1.0 + 1e-10);
        const double slope = grad.dot(p);
        const double r2 = r.squaredNorm();
        for (int trial = 0; !accepted && trial < cfg.max_trials; ++trial)
        {
            if (trial > 0)
                residual(ref + basis * (y + lambda * p), rt, nullptr);
            if (rt.squaredNorm() <= r2 + 2.0 * cfg.sufficient_decrease * lambda * slope + 1e-12 * r2)
                accepted = true;
            else
                lambda *= cfg.shrink;
        }
        if (!accepted)
            break;
        y += lambda * p;
        p_norm = lambda * p.norm();
        rep.step_norms.push_back(p_norm);
        rep.lambdas.push_back(lambda);
        rep.iterates.push_back(y);
    }
    return rep;
}

}  // namespace wst

#endif  // WST_SOLVER_HPP_
