// Copyright 2026 The wst-lspg Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WST_SUBSPACES_HPP_
#define WST_SUBSPACES_HPP_

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "wst/burgers.hpp"
#include "wst/densekit.hpp"
#include "wst/windows.hpp"

namespace wst
{

/// Three-way snapshot tensor stored as one N_s x N_t slice per training
/// parameter.
struct SnapshotTensor3
{
    Index n_space = 0;
    Index n_time = 0;
    std::vector<Matrix> slices;

    Index n_train() const { return static_cast<Index>(slices.size()); }

    double operator()(Index a, Index b, Index c) const { return slices[static_cast<std::size_t>(c)](a, b); }

    /// Mode-1 unfolding, N_s x (N_t * n_train), parameter slices side by side.
    Matrix unfold_space() const
    {
        Matrix out(n_space, n_time * n_train());
        for (Index c = 0; c < n_train(); ++c)
            out.middleCols(c * n_time, n_time) = slices[static_cast<std::size_t>(c)];
        return out;
    }

    bool all_zero() const
    {
        for (const Matrix& s : slices)
            if (s.size() > 0 && s.cwiseAbs().maxCoeff() > 0.0)
                return false;
        return true;
    }
};

/// Entries u^{zeta+b}_a(mu_c) - u^{zeta-1}_a(mu_c) for sub-window m of window k.
inline SnapshotTensor3 build_snapshot_tensor(const std::vector<Trajectory>& trajectories, const WindowPlan& plan,
                                             Index k, Index m)
{
    if (trajectories.empty())
        throw Error("build_snapshot_tensor: no training trajectories");
    const Index z = plan.zeta(k, m);
    const Index nt = plan.sub_steps(k, m);
    SnapshotTensor3 t;
    t.n_space = trajectories.front().n_space();
    t.n_time = nt;
    for (std::size_t c = 0; c < trajectories.size(); ++c)
    {
        const Trajectory& tr = trajectories[c];
        if (tr.n_time() < z + nt - 1)
            throw Error("build_snapshot_tensor: trajectory " + std::to_string(c) + " has " +
                        std::to_string(tr.n_time()) + " steps, sub-window (" + std::to_string(k) + ", " +
                        std::to_string(m) + ") needs " + std::to_string(z + nt - 1));
        if (tr.n_space() != t.n_space)
            throw Error("build_snapshot_tensor: trajectories disagree on the state size");
        Matrix slice = tr.block(z, nt);
        slice.colwise() -= tr.state(z - 1);
        t.slices.push_back(std::move(slice));
    }
    return t;
}

/// Spatial POD of the mode-1 unfolding with energy truncation.
inline Matrix pod_spatial(const SnapshotTensor3& t, double e_s, Vector* singular_values = nullptr)
{
    if (t.all_zero())
        throw Error("pod_spatial: snapshot tensor is identically zero, no basis can be derived");
    const SvdResult svd = thin_svd(t.unfold_space());
    if (singular_values)
        *singular_values = svd.singular_values;
    const Index n = energy_count(svd.singular_values, e_s);
    return svd.U.leftCols(n);
}

struct TemporalBases
{
    std::vector<Matrix> psi;
    /// Spatial modes whose temporal projection vanished; they received a
    /// canonical placeholder vector.
    std::vector<Index> zero_modes;
};

/// Tailored temporal bases: one SVD per spatial mode of the N_t x n_train
/// matrix whose columns are X(mu_c)^T phi_i.
inline TemporalBases tailored_temporal(const SnapshotTensor3& t, const Matrix& phi, double e_t)
{
    if (phi.rows() != t.n_space)
        throw Error("tailored_temporal: spatial basis has " + std::to_string(phi.rows()) + " rows, tensor has " +
                    std::to_string(t.n_space));
    TemporalBases out;
    for (Index i = 0; i < phi.cols(); ++i)
    {
        Matrix proj(t.n_time, t.n_train());
        for (Index c = 0; c < t.n_train(); ++c)
            proj.col(c).noalias() = t.slices[static_cast<std::size_t>(c)].transpose() * phi.col(i);
        if (proj.cwiseAbs().maxCoeff() == 0.0)
        {
            out.psi.push_back(Matrix::Identity(t.n_time, 1));
            out.zero_modes.push_back(i);
            continue;
        }
        const SvdResult svd = thin_svd(proj);
        const Index n = energy_count(svd.singular_values, e_t);
        out.psi.push_back(svd.U.leftCols(n));
    }
    return out;
}

/// Tensor-product basis of one sub-window.
struct SubwindowBasis
{
    Matrix spatial;
    std::vector<Matrix> temporal;
    Matrix assembled;

    Index n_space() const { return spatial.rows(); }
    Index n_steps() const { return temporal.empty() ? 0 : temporal.front().rows(); }
    Index cols() const { return assembled.cols(); }
};

/// Column (i, j) holds phi_i (x) psi^i_j, vectorized time-major so that the
/// entry for cell a at local step b sits in row b * N_s + a.
inline SubwindowBasis assemble_subwindow_basis(const Matrix& phi, const std::vector<Matrix>& psi)
{
    if (static_cast<Index>(psi.size()) != phi.cols())
        throw Error("assemble_subwindow_basis: " + std::to_string(phi.cols()) + " spatial vectors but " +
                    std::to_string(psi.size()) + " temporal bases");
    if (psi.empty())
        throw Error("assemble_subwindow_basis: empty basis");
    const Index ns = phi.rows();
    const Index nt = psi.front().rows();
    Index total = 0;
    for (const Matrix& p : psi)
    {
        if (p.rows() != nt)
            throw Error("assemble_subwindow_basis: temporal bases disagree on the number of steps");
        total += p.cols();
    }
    SubwindowBasis out;
    out.spatial = phi;
    out.temporal = psi;
    out.assembled.resize(ns * nt, total);
    Index col = 0;
    for (Index i = 0; i < phi.cols(); ++i)
    {
        const Matrix& p = psi[static_cast<std::size_t>(i)];
        for (Index j = 0; j < p.cols(); ++j, ++col)
            for (Index b = 0; b < nt; ++b)
                out.assembled.col(col).segment(b * ns, ns) = p(b, j) * phi.col(i);
    }
    return out;
}

/// Block-lower-triangular window basis. Stored by its sub-window blocks and
/// the trailing rows of each block; the dense form is built only on demand.
class WindowBasis
{
public:
    WindowBasis() = default;

    WindowBasis(Index n_space, std::vector<Matrix> blocks) : ns_(n_space), blocks_(std::move(blocks))
    {
        if (blocks_.empty())
            throw Error("WindowBasis: no sub-window blocks");
        Index col = 0;
        Index step = 0;
        for (const Matrix& b : blocks_)
        {
            if (b.rows() == 0 || b.rows() % ns_ != 0)
                throw Error("WindowBasis: block with " + std::to_string(b.rows()) + " rows is not a multiple of " +
                            std::to_string(ns_));
            col_off_.push_back(col);
            step_off_.push_back(step);
            col += b.cols();
            step += b.rows() / ns_;
            trailing_.push_back(b.bottomRows(ns_));
        }
        cols_ = col;
        steps_ = step;
    }

    Index n_space() const { return ns_; }
    Index n_steps() const { return steps_; }
    Index rows() const { return ns_ * steps_; }
    Index cols() const { return cols_; }
    Index n_sub() const { return static_cast<Index>(blocks_.size()); }
    const Matrix& block(Index m) const { return blocks_[static_cast<std::size_t>(m)]; }
    const Matrix& trailing(Index m) const { return trailing_[static_cast<std::size_t>(m)]; }
    Index col_offset(Index m) const { return col_off_[static_cast<std::size_t>(m)]; }
    Index step_offset(Index m) const { return step_off_[static_cast<std::size_t>(m)]; }
    Index sub_cols(Index m) const { return block(m).cols(); }
    Index sub_steps(Index m) const { return block(m).rows() / ns_; }

    Index sub_of_step(Index j) const
    {
        if (j < 0 || j >= steps_)
            throw Error("WindowBasis: local step " + std::to_string(j) + " out of range");
        const auto it = std::upper_bound(step_off_.begin(), step_off_.end(), j);
        return static_cast<Index>(it - step_off_.begin()) - 1;
    }

    /// Columns that can be nonzero in the rows of local step j.
    Index active_cols(Index j) const
    {
        const Index m = sub_of_step(j);
        return col_offset(m) + sub_cols(m);
    }

    /// Rows of local step j restricted to its active columns.
    void step_block(Index j, Matrix& out) const
    {
        const Index m = sub_of_step(j);
        out.resize(ns_, active_cols(j));
        for (Index q = 0; q < m; ++q)
            out.middleCols(col_offset(q), sub_cols(q)) = trailing(q);
        out.middleCols(col_offset(m), sub_cols(m)) = block(m).middleRows((j - step_offset(m)) * ns_, ns_);
    }

    /// Single row (local step j, cell s) written into out[0..cols()).
    void row(Index j, Index s, double* out) const
    {
        const Index m = sub_of_step(j);
        std::fill(out, out + cols_, 0.0);
        for (Index q = 0; q < m; ++q)
            for (Index c = 0; c < sub_cols(q); ++c)
                out[col_offset(q) + c] = trailing(q)(s, c);
        const Index r = (j - step_offset(m)) * ns_ + s;
        for (Index c = 0; c < sub_cols(m); ++c)
            out[col_offset(m) + c] = block(m)(r, c);
    }

    /// Pi * y, time-major.
    Vector apply(const Vector& y) const
    {
        if (y.size() != cols_)
            throw Error("WindowBasis::apply: coordinate length " + std::to_string(y.size()) + ", expected " +
                        std::to_string(cols_));
        Vector out(rows());
        Vector carry = Vector::Zero(ns_);
        for (Index m = 0; m < n_sub(); ++m)
        {
            const auto ym = y.segment(col_offset(m), sub_cols(m));
            auto seg = out.segment(step_offset(m) * ns_, block(m).rows());
            seg.noalias() = block(m) * ym;
            for (Index b = 0; b < sub_steps(m); ++b)
                seg.segment(b * ns_, ns_) += carry;
            carry.noalias() += trailing(m) * ym;
        }
        return out;
    }

    Matrix dense() const
    {
        Matrix out = Matrix::Zero(rows(), cols_);
        for (Index m = 0; m < n_sub(); ++m)
        {
            out.block(step_offset(m) * ns_, col_offset(m), block(m).rows(), sub_cols(m)) = block(m);
            for (Index later = m + 1; later < n_sub(); ++later)
                for (Index b = 0; b < sub_steps(later); ++b)
                    out.block((step_offset(later) + b) * ns_, col_offset(m), ns_, sub_cols(m)) = trailing(m);
        }
        return out;
    }

    /// Block-diagonal part only (no trailing coupling).
    Matrix block_diagonal() const
    {
        Matrix out = Matrix::Zero(rows(), cols_);
        for (Index m = 0; m < n_sub(); ++m)
            out.block(step_offset(m) * ns_, col_offset(m), block(m).rows(), sub_cols(m)) = block(m);
        return out;
    }

private:
    Index ns_ = 0;
    Index cols_ = 0;
    Index steps_ = 0;
    std::vector<Matrix> blocks_;
    std::vector<Matrix> trailing_;
    std::vector<Index> col_off_;
    std::vector<Index> step_off_;
};

inline WindowBasis assemble_window_basis(const std::vector<SubwindowBasis>& subs, const WindowPlan& plan, Index k)
{
    if (static_cast<Index>(subs.size()) != plan.n_sub(k))
        throw Error("assemble_window_basis: window " + std::to_string(k) + " has " + std::to_string(plan.n_sub(k)) +
                    " sub-windows, got " + std::to_string(subs.size()) + " bases");
    std::vector<Matrix> blocks;
    for (std::size_t m = 0; m < subs.size(); ++m)
    {
        if (subs[m].n_steps() != plan.sub_steps(k, static_cast<Index>(m)))
            throw Error("assemble_window_basis: sub-window " + std::to_string(m) + " of window " +
                        std::to_string(k) + " spans " + std::to_string(plan.sub_steps(k, static_cast<Index>(m))) +
                        " steps, basis has " + std::to_string(subs[m].n_steps()));
        blocks.push_back(subs[m].assembled);
    }
    return WindowBasis(subs.front().n_space(), std::move(blocks));
}

/// Bases of every sub-window and window of a plan.
struct TrainedBases
{
    WindowPlan plan;
    double e_s = 1.0;
    double e_t = 1.0;
    std::vector<std::vector<SubwindowBasis>> subs;
    std::vector<WindowBasis> windows;

    Index total_cols() const
    {
        Index n = 0;
        for (const WindowBasis& w : windows)
            n += w.cols();
        return n;
    }
};

inline TrainedBases train_bases(const std::vector<Trajectory>& trajectories, const WindowPlan& plan, double e_s,
                                double e_t)
{
    TrainedBases out;
    out.plan = plan;
    out.e_s = e_s;
    out.e_t = e_t;
    for (Index k = 0; k < plan.n_windows(); ++k)
    {
        std::vector<SubwindowBasis> subs;
        for (Index m = 0; m < plan.n_sub(k); ++m)
        {
            const SnapshotTensor3 t = build_snapshot_tensor(trajectories, plan, k, m);
            const Matrix phi = pod_spatial(t, e_s);
            const TemporalBases psi = tailored_temporal(t, phi, e_t);
            subs.push_back(assemble_subwindow_basis(phi, psi.psi));
        }
        out.windows.push_back(assemble_window_basis(subs, plan, k));
        out.subs.push_back(std::move(subs));
    }
    return out;
}

namespace detail
{

// Pseudo-inverse that skips the SVD when the columns are already orthonormal.
inline Matrix basis_pinv(const Matrix& b)
{
    const Matrix g = b.transpose() * b;
    if ((g - Matrix::Identity(g.rows(), g.cols())).norm() <= 1e-10 * std::sqrt(static_cast<double>(g.rows())))
        return b.transpose();
    return pseudo_inverse(b);
}

}  // namespace detail

/// Affine regression (1, mu1, mu2) -> reduced coordinates for each window.
struct InitialGuessModel
{
    std::vector<Parameters> params;
    /// Per window: n_st x n_train training targets.
    std::vector<Matrix> targets;
    /// Per window: n_st x 3 regression coefficients.
    std::vector<Matrix> coefficients;
    /// True when too few training points forced a nearest-neighbor guess.
    bool nearest_neighbor = false;

    Vector predict(const Parameters& p, Index k) const
    {
        if (k < 0 || k >= static_cast<Index>(targets.size()))
            throw Error("InitialGuessModel: window " + std::to_string(k) + " out of range");
        const std::size_t w = static_cast<std::size_t>(k);
        if (nearest_neighbor)
        {
            Index best = 0;
            double dist = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < params.size(); ++c)
            {
                const double d = std::hypot(params[c].mu1 - p.mu1, params[c].mu2 - p.mu2);
                if (d < dist)
                {
                    dist = d;
                    best = static_cast<Index>(c);
                }
            }
            return targets[w].col(best);
        }
        Vector feat(3);
        feat << 1.0, p.mu1, p.mu2;
        return coefficients[w] * feat;
    }
};

inline InitialGuessModel fit_initial_guess(const TrainedBases& bases, const std::vector<Trajectory>& trajectories,
                                           const std::vector<Parameters>& params)
{
    if (trajectories.size() != params.size() || trajectories.empty())
        throw Error("fit_initial_guess: need one parameter per training trajectory");
    const WindowPlan& plan = bases.plan;
    InitialGuessModel model;
    model.params = params;
    model.nearest_neighbor = params.size() < 3;
    const Index n_train = static_cast<Index>(params.size());

    Matrix design(n_train, 3);
    for (Index c = 0; c < n_train; ++c)
        design.row(c) << 1.0, params[static_cast<std::size_t>(c)].mu1, params[static_cast<std::size_t>(c)].mu2;
    const Matrix design_pinv = pseudo_inverse(design);

    for (Index k = 0; k < plan.n_windows(); ++k)
    {
        const WindowBasis& wb = bases.windows[static_cast<std::size_t>(k)];
        Matrix targets(wb.cols(), n_train);
        for (Index m = 0; m < plan.n_sub(k); ++m)
        {
            const Matrix pinv = detail::basis_pinv(wb.block(m));
            const Index z = plan.zeta(k, m);
            const Index nt = plan.sub_steps(k, m);
            for (Index c = 0; c < n_train; ++c)
            {
                const Trajectory& tr = trajectories[static_cast<std::size_t>(c)];
                Matrix x = tr.block(z, nt);
                x.colwise() -= tr.state(z - 1);
                const Eigen::Map<const Vector> xv(x.data(), x.size());
                targets.col(c).segment(wb.col_offset(m), wb.sub_cols(m)).noalias() = pinv * xv;
            }
        }
        model.coefficients.push_back(targets * design_pinv.transpose());
        model.targets.push_back(std::move(targets));
    }
    return model;
}

}  // namespace wst

#endif  // WST_SUBSPACES_HPP_
