// Copyright 2026 The wst-lspg Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WST_WINDOWS_HPP_
#define WST_WINDOWS_HPP_

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "wst/lmm.hpp"
#include "wst/model.hpp"
#include "wst/trajectory.hpp"

namespace wst
{

/// Partition of the N_t time steps into windows and sub-windows.
/// Step indices are 1-based throughout (step 0 is the initial condition).
class WindowPlan
{
public:
    WindowPlan() = default;

    WindowPlan(Index n_time_total, double dt, std::vector<std::vector<Index>> windows,
               LmmScheme scheme = LmmScheme::bdf1())
        : n_time_(n_time_total), dt_(dt), scheme_(scheme), windows_(std::move(windows))
    {
        if (!(dt > 0.0))
            throw Error("WindowPlan: dt must be positive");
        if (windows_.empty())
            throw Error("WindowPlan: no windows");
        Index total = 0;
        for (std::size_t k = 0; k < windows_.size(); ++k)
        {
            if (windows_[k].empty())
                throw Error("WindowPlan: window " + std::to_string(k) + " has no sub-windows");
            for (Index s : windows_[k])
            {
                if (s < 1)
                    throw Error("WindowPlan: window " + std::to_string(k) + " has an empty sub-window");
                total += s;
            }
        }
        if (total != n_time_total)
            throw Error("WindowPlan: windows cover " + std::to_string(total) + " steps, expected " +
                        std::to_string(n_time_total));
        starts_.resize(windows_.size());
        Index next = 1;
        for (std::size_t k = 0; k < windows_.size(); ++k)
        {
            starts_[k] = next;
            next += std::accumulate(windows_[k].begin(), windows_[k].end(), Index{0});
        }
        l_w_ = dt * static_cast<double>(window_steps(0));
        l_s_ = dt * static_cast<double>(windows_[0][0]);
    }

    /// Uniform plan with window length l_w and sub-window length l_s, both
    /// required to be whole numbers of steps with l_s | l_w | T.
    static WindowPlan uniform(Index n_time_total, double dt, double l_w, double l_s,
                              LmmScheme scheme = LmmScheme::bdf1())
    {
        const Index sw = steps_of(l_w, dt, "window length");
        const Index ss = steps_of(l_s, dt, "sub-window length");
        if (n_time_total % sw != 0)
            throw Error("WindowPlan: window length " + std::to_string(l_w) + " does not divide T = " +
                        std::to_string(dt * static_cast<double>(n_time_total)));
        if (sw % ss != 0)
            throw Error("WindowPlan: sub-window length " + std::to_string(l_s) + " does not divide window length " +
                        std::to_string(l_w));
        std::vector<std::vector<Index>> w(static_cast<std::size_t>(n_time_total / sw),
                                          std::vector<Index>(static_cast<std::size_t>(sw / ss), ss));
        WindowPlan plan(n_time_total, dt, std::move(w), scheme);
        plan.l_w_ = l_w;
        plan.l_s_ = l_s;
        return plan;
    }

    Index n_time() const { return n_time_; }
    double dt() const { return dt_; }
    double final_time() const { return dt_ * static_cast<double>(n_time_); }
    double l_w() const { return l_w_; }
    double l_s() const { return l_s_; }
    const LmmScheme& scheme() const { return scheme_; }

    Index n_windows() const { return static_cast<Index>(windows_.size()); }
    Index n_sub(Index k) const { return static_cast<Index>(window(k).size()); }
    Index window_steps(Index k) const
    {
        const auto& w = window(k);
        return std::accumulate(w.begin(), w.end(), Index{0});
    }
    Index sub_steps(Index k, Index m) const
    {
        const auto& w = window(k);
        if (m < 0 || m >= static_cast<Index>(w.size()))
            throw Error("WindowPlan: sub-window " + std::to_string(m) + " out of range in window " + std::to_string(k));
        return w[static_cast<std::size_t>(m)];
    }
    const std::vector<Index>& sub_step_counts(Index k) const { return window(k); }

    /// First global step of window k.
    Index phi(Index k) const
    {
        window(k);
        return starts_[static_cast<std::size_t>(k)];
    }

    /// First global step of sub-window m of window k.
    Index zeta(Index k, Index m) const
    {
        Index z = phi(k);
        sub_steps(k, m);
        for (Index n = 0; n < m; ++n)
            z += sub_steps(k, n);
        return z;
    }

    /// Offset of sub-window m's first step inside window k.
    Index sub_offset(Index k, Index m) const { return zeta(k, m) - phi(k); }

    /// Sub-window holding local step j of window k.
    Index sub_of_local(Index k, Index j) const
    {
        const auto& w = window(k);
        Index acc = 0;
        for (std::size_t m = 0; m < w.size(); ++m)
        {
            acc += w[m];
            if (j < acc)
                return static_cast<Index>(m);
        }
        throw Error("WindowPlan: local step " + std::to_string(j) + " outside window " + std::to_string(k));
    }

    /// Steps where the multistep scheme restarts (every window start).
    std::vector<Index> restart_steps() const { return starts_; }

    bool single_window() const { return n_windows() == 1 && n_sub(0) == 1; }

private:
    static Index steps_of(double len, double dt, const char* what)
    {
        if (!(len > 0.0))
            throw Error(std::string("WindowPlan: ") + what + " must be positive");
        const double q = len / dt;
        const double r = std::round(q);
        if (r < 1.0 || std::abs(q - r) > 1e-9 * std::max(1.0, q))
            throw Error(std::string("WindowPlan: ") + what + " " + std::to_string(len) +
                        " is not a whole number of time steps");
        return static_cast<Index>(r);
    }

    const std::vector<Index>& window(Index k) const
    {
        if (k < 0 || k >= n_windows())
            throw Error("WindowPlan: window " + std::to_string(k) + " out of range [0, " +
                        std::to_string(n_windows()) + ")");
        return windows_[static_cast<std::size_t>(k)];
    }

    Index n_time_ = 0;
    double dt_ = 0.0;
    double l_w_ = 0.0;
    double l_s_ = 0.0;
    LmmScheme scheme_;
    std::vector<std::vector<Index>> windows_;
    std::vector<Index> starts_;
};

/// Multistep coefficients of local step j inside a window (restart at j = 0).
inline LmmStep window_step(const WindowPlan& plan, Index j) { return plan.scheme().at(j); }

/// Stacks the per-step residuals of window k, time-major (length N_s * N_t^k).
/// `states` holds the window's states column by column; `incoming` is the
/// state just before the window.
template <Model M>
Vector assemble_window_residual(const M& model, const Matrix& states, const Vector& incoming, const WindowPlan& plan,
                                Index k)
{
    const Index ns = model.size();
    const Index nt = plan.window_steps(k);
    if (states.rows() != ns || states.cols() != nt || incoming.size() != ns)
        throw Error("assemble_window_residual: window " + std::to_string(k) + " expects states " +
                    detail::dims(ns, nt) + " and incoming length " + std::to_string(ns) + ", got " +
                    detail::dims(states.rows(), states.cols()) + " and " + std::to_string(incoming.size()));
    const double dt = plan.dt();
    Matrix f(ns, nt);
    Vector fj(ns);
    for (Index j = 0; j < nt; ++j)
    {
        model.velocity(states.col(j), fj);
        f.col(j) = fj;
    }
    Vector f_in;
    Vector r(ns * nt);
    for (Index j = 0; j < nt; ++j)
    {
        const LmmStep c = window_step(plan, j);
        auto rj = r.segment(j * ns, ns);
        rj.setZero();
        for (int i = 0; i <= c.width; ++i)
        {
            const double a = c.alpha[static_cast<std::size_t>(i)];
            const double b = c.beta[static_cast<std::size_t>(i)];
            const Index src = j - i;
            if (src >= 0)
            {
                if (a != 0.0)
                    rj += a * states.col(src);
                if (b != 0.0)
                    rj -= dt * b * f.col(src);
            }
            else
            {
                if (a != 0.0)
                    rj += a * incoming;
                if (b != 0.0)
                {
                    if (f_in.size() == 0)
                        model.velocity(incoming, f_in);
                    rj -= dt * b * f_in;
                }
            }
        }
    }
    return r;
}

/// Dense basis adapter exposing the step-block interface used by the
/// Jacobian assembly.
class DenseBasis
{
public:
    DenseBasis(Matrix m, Index n_space) : m_(std::move(m)), ns_(n_space)
    {
        if (ns_ < 1 || m_.rows() % ns_ != 0)
            throw Error("DenseBasis: " + std::to_string(m_.rows()) + " rows is not a multiple of " +
                        std::to_string(ns_));
    }
    Index n_space() const { return ns_; }
    Index n_steps() const { return m_.rows() / ns_; }
    Index rows() const { return m_.rows(); }
    Index cols() const { return m_.cols(); }
    Index active_cols(Index) const { return m_.cols(); }
    void step_block(Index j, Matrix& out) const { out = m_.middleRows(j * ns_, ns_); }
    Vector apply(const Vector& y) const { return m_ * y; }
    const Matrix& dense() const { return m_; }

private:
    Matrix m_;
    Index ns_;
};

/// J = (dr/du) * Pi for window k, with the states already reconstructed.
/// The basis must provide n_space(), n_steps(), cols(), active_cols(j) and
/// step_block(j, out) (rows of local step j, first active_cols(j) columns).
template <Model M, class Basis>
void assemble_window_jacobian(const M& model, const Matrix& states, const WindowPlan& plan, Index k,
                              const Basis& basis, Matrix& jac)
{
    const Index ns = model.size();
    const Index nt = plan.window_steps(k);
    if (basis.n_space() != ns || basis.n_steps() != nt || states.rows() != ns || states.cols() != nt)
        throw Error("assemble_window_jacobian: window " + std::to_string(k) + " size mismatch (basis " +
                    detail::dims(basis.n_space() * basis.n_steps(), basis.cols()) + ", states " +
                    detail::dims(states.rows(), states.cols()) + ")");
    const double dt = plan.dt();
    const Index nc = basis.cols();
    jac.resize(ns * nt, nc);
    jac.setZero();

    std::vector<Matrix> blocks(static_cast<std::size_t>(nt));
    SparseMatrix dfdu;
    for (Index j = 0; j < nt; ++j)
    {
        const LmmStep c = window_step(plan, j);
        basis.step_block(j, blocks[static_cast<std::size_t>(j)]);
        auto jj = jac.middleRows(j * ns, ns);
        for (int i = 0; i <= c.width; ++i)
        {
            const Index src = j - i;
            if (src < 0)
                continue;  // the incoming state is fixed
            const Matrix& pb = blocks[static_cast<std::size_t>(src)];
            const double a = c.alpha[static_cast<std::size_t>(i)];
            const double b = c.beta[static_cast<std::size_t>(i)];
            const Index ac = pb.cols();
            if (a != 0.0)
                jj.leftCols(ac) += a * pb;
            if (b != 0.0)
            {
                model.jacobian(states.col(src), dfdu);
                jj.leftCols(ac).noalias() -= (dt * b) * (dfdu * pb);
            }
        }
        // Blocks older than the scheme width are no longer needed.
        if (j >= 2)
            blocks[static_cast<std::size_t>(j - 2)].resize(0, 0);
    }
}

/// Temporal factors of the residual decomposition
///   r^k(v; u0) = A v - dt B f(v) + A_IC u0 - dt B_IC f(u0),
/// where each space-time operator is the Kronecker product of the factor
/// with the N_s x N_s identity.
struct WindowOperators
{
    Index n_space = 0;
    Matrix At;
    Matrix Bt;
    Matrix AICt;
    Matrix BICt;

    static Matrix kron_identity(const Matrix& t, Index n)
    {
        Matrix out = Matrix::Zero(t.rows() * n, t.cols() * n);
        for (Index i = 0; i < t.rows(); ++i)
            for (Index j = 0; j < t.cols(); ++j)
                if (t(i, j) != 0.0)
                    out.block(i * n, j * n, n, n).diagonal().setConstant(t(i, j));
        return out;
    }

    Matrix A() const { return kron_identity(At, n_space); }
    Matrix B() const { return kron_identity(Bt, n_space); }
    Matrix A_IC() const { return kron_identity(AICt, n_space); }
    Matrix B_IC() const { return kron_identity(BICt, n_space); }
};

inline WindowOperators build_window_operators(const WindowPlan& plan, Index k, Index n_space)
{
    const Index nt = plan.window_steps(k);
    WindowOperators op;
    op.n_space = n_space;
    op.At = Matrix::Zero(nt, nt);
    op.Bt = Matrix::Zero(nt, nt);
    op.AICt = Matrix::Zero(nt, 1);
    op.BICt = Matrix::Zero(nt, 1);
    for (Index j = 0; j < nt; ++j)
    {
        const LmmStep c = window_step(plan, j);
        for (int i = 0; i <= c.width; ++i)
        {
            const Index src = j - i;
            const double a = c.alpha[static_cast<std::size_t>(i)];
            const double b = c.beta[static_cast<std::size_t>(i)];
            if (src >= 0)
            {
                op.At(j, src) += a;
                op.Bt(j, src) += b;
            }
            else
            {
                op.AICt(j, 0) += a;
                op.BICt(j, 0) += b;
            }
        }
    }
    return op;
}

/// Squared residual norms summed over all windows of `plan`.
template <Model M>
double trajectory_residual_l2(const M& model, const Trajectory& traj, const WindowPlan& plan)
{
    if (traj.n_time() != plan.n_time())
        throw Error("residual_l2: trajectory has " + std::to_string(traj.n_time()) + " steps, plan has " +
                    std::to_string(plan.n_time()));
    double acc = 0.0;
    for (Index k = 0; k < plan.n_windows(); ++k)
    {
        const Index first = plan.phi(k);
        const Vector r =
            assemble_window_residual(model, traj.block(first, plan.window_steps(k)), traj.state(first - 1), plan, k);
        acc += r.squaredNorm();
    }
    return std::sqrt(acc);
}

}  // namespace wst

#endif  // WST_WINDOWS_HPP_
