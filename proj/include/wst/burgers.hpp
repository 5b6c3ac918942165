// Copyright 2026 The wst-lspg Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WST_BURGERS_HPP_
#define WST_BURGERS_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "wst/fom.hpp"

namespace wst
{

struct Parameters
{
    double mu1 = 0.0;  // inflow state at the left boundary
    double mu2 = 0.0;  // decay rate of the source term

    bool in_training_domain() const { return mu1 >= 2.0 && mu1 <= 4.1 && mu2 >= 0.013 && mu2 <= 0.02; }

    friend bool operator==(const Parameters&, const Parameters&) = default;
};

struct SpatialGrid
{
    Index n_cells = 200;
    double x_min = 0.0;
    double x_max = 100.0;

    SpatialGrid() = default;
    SpatialGrid(Index n, double lo, double hi) : n_cells(n), x_min(lo), x_max(hi)
    {
        if (n < 1 || !(hi > lo))
            throw Error("SpatialGrid: needs n_cells >= 1 and x_max > x_min");
    }

    double dx() const { return (x_max - x_min) / static_cast<double>(n_cells); }
    double center(Index i) const { return x_min + (static_cast<double>(i) + 0.5) * dx(); }
    Vector centers() const
    {
        Vector x(n_cells);
        for (Index i = 0; i < n_cells; ++i)
            x(i) = center(i);
        return x;
    }
};

inline double burgers_flux(double u) { return 0.5 * u * u; }

/// Exact Riemann flux for f(u) = u^2/2.
inline double godunov_flux(double u_left, double u_right)
{
    return std::max(burgers_flux(std::max(u_left, 0.0)), burgers_flux(std::min(u_right, 0.0)));
}

/// Derivatives of godunov_flux with respect to (u_left, u_right). At ties the
/// left-state branch is taken.
inline void godunov_flux_derivative(double u_left, double u_right, double& d_left, double& d_right)
{
    const double l = std::max(u_left, 0.0);
    const double r = std::min(u_right, 0.0);
    if (burgers_flux(l) >= burgers_flux(r))
    {
        d_left = l;
        d_right = 0.0;
    }
    else
    {
        d_left = 0.0;
        d_right = r;
    }
}

/// First-order Godunov finite-volume discretization of
///   du/dt + d(u^2/2)/dx = 0.02 exp(mu2 x)
/// with inflow ghost state mu1 on the left and upwind outflow on the right.
class BurgersModel
{
public:
    BurgersModel(const SpatialGrid& grid, const Parameters& p) : grid_(grid), p_(p), dx_(grid.dx())
    {
        source_.resize(grid.n_cells);
        for (Index i = 0; i < grid.n_cells; ++i)
            source_(i) = 0.02 * std::exp(p.mu2 * grid.center(i));
    }

    Index size() const { return grid_.n_cells; }
    const SpatialGrid& grid() const { return grid_; }
    const Parameters& params() const { return p_; }
    const Vector& source() const { return source_; }

    /// Flux through interface i - 1/2, i = 0..n_cells.
    double interface_flux(const Vector& u, Index i) const
    {
        const Index n = grid_.n_cells;
        if (i == 0)
            return godunov_flux(p_.mu1, u(0));
        if (i == n)
            return burgers_flux(u(n - 1));
        return godunov_flux(u(i - 1), u(i));
    }

    void velocity(const Vector& u, Vector& f) const
    {
        const Index n = grid_.n_cells;
        f.resize(n);
        double left = interface_flux(u, 0);
        for (Index i = 0; i < n; ++i)
        {
            const double right = interface_flux(u, i + 1);
            f(i) = -(right - left) / dx_ + source_(i);
            left = right;
        }
    }

    void jacobian(const Vector& u, SparseMatrix& jac) const
    {
        const Index n = grid_.n_cells;
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(static_cast<std::size_t>(3 * n));
        std::vector<Index> cells;
        double d[3];
        for (Index i = 0; i < n; ++i)
        {
            velocity_row(i, u, d);
            stencil(i, cells);
            for (std::size_t j = 0; j < cells.size(); ++j)
                t.emplace_back(i, cells[j], d[j]);
        }
        jac.resize(n, n);
        jac.setFromTriplets(t.begin(), t.end());
    }

    void stencil(Index i, std::vector<Index>& cells) const
    {
        cells.clear();
        if (i > 0)
            cells.push_back(i - 1);
        cells.push_back(i);
        if (i + 1 < grid_.n_cells)
            cells.push_back(i + 1);
    }

    double velocity_row(Index i, const Vector& u, double* d) const
    {
        const Index n = grid_.n_cells;
        double fl = 0.0;
        double fr = 0.0;
        double dl_l = 0.0, dl_r = 0.0;  // left interface wrt (u_{i-1} or ghost, u_i)
        double dr_l = 0.0, dr_r = 0.0;  // right interface wrt (u_i, u_{i+1})
        const double ui = u(i);
        const double ul = i > 0 ? u(i - 1) : p_.mu1;
        fl = godunov_flux(ul, ui);
        godunov_flux_derivative(ul, ui, dl_l, dl_r);
        if (i + 1 < n)
        {
            fr = godunov_flux(ui, u(i + 1));
            godunov_flux_derivative(ui, u(i + 1), dr_l, dr_r);
        }
        else
        {
            fr = burgers_flux(ui);
            dr_l = ui;
        }
        if (d)
        {
            Index j = 0;
            if (i > 0)
                d[j++] = dl_l / dx_;
            d[j++] = (dl_r - dr_l) / dx_;
            if (i + 1 < n)
                d[j++] = -dr_r / dx_;
        }
        return -(fr - fl) / dx_ + source_(i);
    }

private:
    SpatialGrid grid_;
    Parameters p_;
    double dx_;
    Vector source_;
};

/// Runs the Burgers full-order model from u(x, 0) = 1.
inline Trajectory fom_march(const Parameters& p, const SpatialGrid& grid, double dt, Index n_steps,
                            const LmmScheme& scheme = LmmScheme::bdf1(), const std::vector<Index>& restarts = {})
{
    BurgersModel model(grid, p);
    return march(model, Vector::Ones(grid.n_cells), dt, n_steps, scheme, restarts);
}

/// Inclusive uniform grid of `count` points on [lo, hi].
inline std::vector<double> linspace(double lo, double hi, Index count)
{
    if (count < 1)
        throw Error("linspace: count must be at least 1");
    std::vector<double> v(static_cast<std::size_t>(count));
    if (count == 1)
    {
        v[0] = lo;
        return v;
    }
    const double h = (hi - lo) / static_cast<double>(count - 1);
    for (Index i = 0; i < count; ++i)
        v[static_cast<std::size_t>(i)] = lo + h * static_cast<double>(i);
    v.back() = hi;
    return v;
}

struct ParameterRange
{
    double lo = 0.0;
    double hi = 0.0;
    Index count = 1;
};

/// Cartesian product of the two axis grids, mu1 varying slowest.
inline std::vector<Parameters> sample_parameter_grid(const ParameterRange& mu1, const ParameterRange& mu2)
{
    if (mu1.count < 1 || mu2.count < 1)
        throw Error("sample_parameter_grid: counts must be at least 1");
    std::vector<Parameters> out;
    for (double a : linspace(mu1.lo, mu1.hi, mu1.count))
        for (double b : linspace(mu2.lo, mu2.hi, mu2.count))
            out.push_back({a, b});
    return out;
}

}  // namespace wst

#endif  // WST_BURGERS_HPP_
