// Copyright 2026 The wst-lspg Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WST_BOUNDS_HPP_
#define WST_BOUNDS_HPP_

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "wst/densekit.hpp"
#include "wst/subspaces.hpp"
#include "wst/trajectory.hpp"
#include "wst/windows.hpp"

namespace wst
{

/// Empirical lower estimate of the Lipschitz constant of f: the largest
/// difference quotient over pairs of sampled states plus `n_perturb`
/// random perturbations of sampled states. Duplicate pairs are skipped.
/// With more than `max_full` states the pairs are drawn at random.
template <Model M>
double estimate_lipschitz(const M& model, const std::vector<Vector>& states, int n_perturb = 100,
                          unsigned seed = 2026, Index max_full = 64, Index n_random_pairs = 2000)
{
    if (states.size() < 2)
        throw Error("estimate_lipschitz: need at least two states");
    const Index n = static_cast<Index>(states.size());
    std::vector<Vector> f(states.size());
    for (std::size_t i = 0; i < states.size(); ++i)
        model.velocity(states[i], f[i]);
    double best = 0.0;
    auto pair = [&](const Vector& v, const Vector& fv, const Vector& w, const Vector& fw) {
        const double d = (v - w).norm();
        if (d == 0.0)
            return;
        best = std::max(best, (fv - fw).norm() / d);
    };
    std::mt19937 gen(seed);
    if (n <= max_full)
    {
        for (Index i = 0; i < n; ++i)
            for (Index j = i + 1; j < n; ++j)
                pair(states[static_cast<std::size_t>(i)], f[static_cast<std::size_t>(i)],
                     states[static_cast<std::size_t>(j)], f[static_cast<std::size_t>(j)]);
    }
    else
    {
        std::uniform_int_distribution<Index> pick(0, n - 1);
        for (Index q = 0; q < n_random_pairs; ++q)
        {
            const std::size_t i = static_cast<std::size_t>(pick(gen));
            const std::size_t j = static_cast<std::size_t>(pick(gen));
            pair(states[i], f[i], states[j], f[j]);
        }
    }
    std::uniform_int_distribution<Index> pick(0, n - 1);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector fw;
    for (int q = 0; q < n_perturb; ++q)
    {
        const std::size_t i = static_cast<std::size_t>(pick(gen));
        Vector xi(states[i].size());
        for (Index a = 0; a < xi.size(); ++a)
            xi(a) = gauss(gen);
        const double scale = 1e-3 * std::max(1.0, states[i].norm()) / xi.norm();
        const Vector w = states[i] + scale * xi;
        model.velocity(w, fw);
        pair(states[i], f[i], w, fw);
    }
    return best;
}

/// Constants and bound terms of one window.
struct WindowBound
{
    Index window = 0;
    double kappa_f = 0.0;
    double sigma_min_A = 0.0;
    double sigma_max_B = 0.0;
    double sigma_max_AIC = 0.0;
    double sigma_max_BIC = 0.0;
    double C1 = 0.0;
    double C2 = 0.0;
    /// ||r^k|| at the ROM solution (a posteriori) or at the projected FOM
    /// (a priori).
    double residual_norm = 0.0;
    /// ||e_IC^k||, error of the state entering the window (NaN if unknown).
    double ic_error = 0.0;
    /// Local bound; +inf when A2 fails or the incoming error is unknown.
    double rhs = 0.0;
    /// Global (accumulated) bound; +inf when A2 fails in any window so far.
    double global_rhs = 0.0;
    /// ||e^k|| of the ROM solution (NaN if no ROM solution was given).
    double lhs = 0.0;
    bool a2_satisfied = false;

    bool violated() const { return a2_satisfied && std::isfinite(rhs) && std::isfinite(lhs) && lhs > rhs; }
};

struct BoundReport
{
    std::string kind;
    double kappa_f = 0.0;
    std::vector<WindowBound> windows;
    /// Simplified exponential a priori bound for the last window (a priori
    /// reports with equal windows only; NaN otherwise).
    double simplified = std::numeric_limits<double>::quiet_NaN();

    Index violations() const
    {
        Index n = 0;
        for (const WindowBound& w : windows)
            n += w.violated() ? 1 : 0;
        return n;
    }
    Index applicable() const
    {
        Index n = 0;
        for (const WindowBound& w : windows)
            n += w.a2_satisfied ? 1 : 0;
        return n;
    }
};

namespace detail
{

inline void window_constants(const WindowPlan& plan, Index k, Index n_space, double kappa_f, WindowBound& wb)
{
    // Singular values of the Kronecker products with the identity equal
    // those of the temporal factors.
    const WindowOperators op = build_window_operators(plan, k, n_space);
    const Vector sa = thin_svd(op.At).singular_values;
    wb.window = k;
    wb.kappa_f = kappa_f;
    wb.sigma_min_A = sa(sa.size() - 1);
    wb.sigma_max_B = thin_svd(op.Bt).singular_values(0);
    wb.sigma_max_AIC = op.AICt.norm();
    wb.sigma_max_BIC = op.BICt.norm();
    const double dt = plan.dt();
    wb.C1 = wb.sigma_min_A - wb.sigma_max_B * dt * kappa_f;
    wb.C2 = wb.sigma_max_AIC + dt * kappa_f * wb.sigma_max_BIC;
    wb.a2_satisfied = wb.C1 > 0.0;
}

inline void check_plan(const Trajectory& t, const WindowPlan& plan, const char* what)
{
    if (t.n_time() != plan.n_time())
        throw Error(std::string(what) + ": trajectory has " + std::to_string(t.n_time()) + " steps, plan has " +
                    std::to_string(plan.n_time()));
}

}  // namespace detail

/// Local and global a posteriori bounds of a ROM trajectory, with the true
/// window errors against the FOM. Windows where A2 fails are reported with
/// an infinite right-hand side.
template <Model M>
BoundReport aposteriori_bound(const M& model, const Trajectory& rom, const Trajectory& fom, const WindowPlan& plan,
                              double kappa_f)
{
    detail::check_plan(rom, plan, "aposteriori_bound");
    detail::check_plan(fom, plan, "aposteriori_bound");
    const double inf = std::numeric_limits<double>::infinity();
    BoundReport rep;
    rep.kind = "aposteriori";
    rep.kappa_f = kappa_f;
    double global = 0.0;
    bool chain_ok = true;
    for (Index k = 0; k < plan.n_windows(); ++k)
    {
        WindowBound wb;
        detail::window_constants(plan, k, model.size(), kappa_f, wb);
        const Index first = plan.phi(k);
        const Index nt = plan.window_steps(k);
        const Matrix block = rom.block(first, nt);
        const Vector in = rom.state(first - 1);
        wb.residual_norm = assemble_window_residual(model, block, in, plan, k).norm();
        wb.ic_error = (fom.state(first - 1) - in).norm();
        wb.lhs = (fom.block(first, nt) - block).norm();
        wb.rhs = wb.a2_satisfied ? wb.residual_norm / wb.C1 + wb.C2 / wb.C1 * wb.ic_error : inf;
        // e^k <= r^k / C1^k + (C2^k / C1^k) e^{k-1}, unrolled.
        chain_ok = chain_ok && wb.a2_satisfied;
        global = chain_ok ? (wb.residual_norm + wb.C2 * global) / wb.C1 : inf;
        wb.global_rhs = global;
        rep.windows.push_back(wb);
    }
    return rep;
}

/// A priori bounds from the l2-orthogonal projection of the FOM onto each
/// window's trial space. The online reference (the ROM's own incoming
/// state) is unknown a priori, so the trial space of window k is anchored
/// at the FOM state entering the window, which also serves as the incoming
/// state of the projected residual. When `rom` is given the true errors and
/// the local bounds are filled in as well.
template <Model M>
BoundReport apriori_bound(const M& model, const Trajectory& fom, const std::vector<WindowBasis>& bases,
                          const WindowPlan& plan, double kappa_f, const Trajectory* rom = nullptr)
{
    detail::check_plan(fom, plan, "apriori_bound");
    if (rom)
        detail::check_plan(*rom, plan, "apriori_bound");
    if (static_cast<Index>(bases.size()) != plan.n_windows())
        throw Error("apriori_bound: bases do not cover every window");
    const double inf = std::numeric_limits<double>::infinity();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    BoundReport rep;
    rep.kind = "apriori";
    rep.kappa_f = kappa_f;
    double global = 0.0;
    bool chain_ok = true;
    bool uniform = true;
    double max_res = 0.0;
    for (Index k = 0; k < plan.n_windows(); ++k)
    {
        WindowBound wb;
        detail::window_constants(plan, k, model.size(), kappa_f, wb);
        const Index first = plan.phi(k);
        const Index nt = plan.window_steps(k);
        const WindowBasis& basis = bases[static_cast<std::size_t>(k)];
        const Vector ref = fom.state(first - 1);
        Matrix target = fom.block(first, nt);
        target.colwise() -= ref;
        const Eigen::Map<const Vector> tv(target.data(), target.size());
        const Vector y = least_squares(basis.dense(), tv).x;
        Matrix proj = Eigen::Map<const Matrix>(basis.apply(y).data(), model.size(), nt);
        proj.colwise() += ref;
        wb.residual_norm = assemble_window_residual(model, proj, ref, plan, k).norm();
        max_res = std::max(max_res, wb.residual_norm);
        if (rom)
        {
            wb.ic_error = (fom.state(first - 1) - rom->state(first - 1)).norm();
            wb.lhs = (fom.block(first, nt) - rom->block(first, nt)).norm();
            wb.rhs = wb.a2_satisfied ? wb.residual_norm / wb.C1 + 2.0 * wb.C2 / wb.C1 * wb.ic_error : inf;
        }
        else
        {
            wb.ic_error = nan;
            wb.lhs = nan;
            wb.rhs = inf;
        }
        chain_ok = chain_ok && wb.a2_satisfied;
        global = chain_ok ? (wb.residual_norm + 2.0 * wb.C2 * global) / wb.C1 : inf;
        wb.global_rhs = global;
        if (k > 0)
            uniform = uniform && nt == plan.window_steps(0);
        rep.windows.push_back(wb);
    }
    if (uniform && chain_ok && !rep.windows.empty())
    {
        const WindowBound& w = rep.windows.front();
        const double dk = w.kappa_f * plan.dt();
        const double q = dk * w.sigma_max_B / w.sigma_min_A;
        const double k = static_cast<double>(rep.windows.size() - 1);
        const double x = dk * (w.sigma_max_BIC / w.sigma_max_AIC + w.sigma_max_B / w.sigma_min_A) / (1.0 - q);
        rep.simplified = (k + 1.0) / w.C1 * std::pow(2.0 * w.sigma_max_AIC / w.sigma_min_A, k) * std::exp(k * x) *
                         max_res;
    }
    return rep;
}

}  // namespace wst

#endif  // WST_BOUNDS_HPP_
