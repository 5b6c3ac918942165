// Copyright 2026 The wst-lspg Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WST_HYPER_HPP_
#define WST_HYPER_HPP_

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "wst/solver.hpp"
#include "wst/subspaces.hpp"

namespace wst
{

/// Residual snapshots of one window: one column per Gauss-Newton iterate
/// per training parameter (the ragged iteration axis flattened).
struct ResidualSnapshots
{
    Index n_space = 0;
    Index n_steps = 0;
    Matrix columns;
    /// Gauss-Newton iterations per training parameter.
    std::vector<int> n_gn;

    Index n_res() const { return columns.cols(); }
};

/// Runs the unweighted WST-LSPG solve for every training parameter and keeps
/// the residual at every evaluated iterate, window by window.
/// solve(q) must run the solve for training parameter q with residual
/// recording switched on.
inline std::vector<ResidualSnapshots> collect_residual_snapshots(
    Index n_params, const WindowPlan& plan, Index n_space, const std::function<RomSolution(Index)>& solve)
{
    if (n_params < 1)
        throw Error("collect_residual_snapshots: no training parameters");
    std::vector<std::vector<Matrix>> per_window(static_cast<std::size_t>(plan.n_windows()));
    std::vector<ResidualSnapshots> out(static_cast<std::size_t>(plan.n_windows()));
    for (Index q = 0; q < n_params; ++q)
    {
        RomSolution sol;
        try
        {
            sol = solve(q);
        }
        catch (const DivergenceError& e)
        {
            throw Error("collect_residual_snapshots: training parameter " + std::to_string(q) +
                        " did not converge in window " + std::to_string(e.window()));
        }
        catch (const Error& e)
        {
            throw Error("collect_residual_snapshots: training parameter " + std::to_string(q) + ": " + e.what());
        }
        for (const WindowSolveReport& rep : sol.reports)
        {
            const std::size_t k = static_cast<std::size_t>(rep.window);
            per_window[k].push_back(rep.residual_snapshots);
            out[k].n_gn.push_back(rep.iterations);
        }
    }
    for (Index k = 0; k < plan.n_windows(); ++k)
    {
        ResidualSnapshots& rs = out[static_cast<std::size_t>(k)];
        rs.n_space = n_space;
        rs.n_steps = plan.window_steps(k);
        Index total = 0;
        for (const Matrix& m : per_window[static_cast<std::size_t>(k)])
            total += m.cols();
        rs.columns.resize(n_space * rs.n_steps, total);
        Index c = 0;
        for (const Matrix& m : per_window[static_cast<std::size_t>(k)])
        {
            rs.columns.middleCols(c, m.cols()) = m;
            c += m.cols();
        }
    }
    return out;
}

/// Orthonormal block-diagonal residual basis of one window.
struct ResidualBasis
{
    Index n_space = 0;
    std::vector<Index> sub_steps;
    std::vector<Matrix> spatial;
    std::vector<std::vector<Matrix>> temporal;
    /// Per residual sub-window, QR-orthonormalized tensor-product basis.
    std::vector<Matrix> blocks;

    Index n_steps() const
    {
        Index n = 0;
        for (Index s : sub_steps)
            n += s;
        return n;
    }
    Index cols() const
    {
        Index n = 0;
        for (const Matrix& b : blocks)
            n += b.cols();
        return n;
    }
    Index step_offset(Index m) const
    {
        Index n = 0;
        for (Index q = 0; q < m; ++q)
            n += sub_steps[static_cast<std::size_t>(q)];
        return n;
    }
    Index col_offset(Index m) const
    {
        Index n = 0;
        for (Index q = 0; q < m; ++q)
            n += blocks[static_cast<std::size_t>(q)].cols();
        return n;
    }
    Index sub_of_step(Index t) const
    {
        Index acc = 0;
        for (std::size_t m = 0; m < sub_steps.size(); ++m)
        {
            acc += sub_steps[m];
            if (t < acc)
                return static_cast<Index>(m);
        }
        throw Error("ResidualBasis: step " + std::to_string(t) + " out of range");
    }

    Matrix dense() const
    {
        Matrix out = Matrix::Zero(n_space * n_steps(), cols());
        for (std::size_t m = 0; m < blocks.size(); ++m)
            out.block(step_offset(static_cast<Index>(m)) * n_space, col_offset(static_cast<Index>(m)),
                      blocks[m].rows(), blocks[m].cols()) = blocks[m];
        return out;
    }

    /// Row (local step t, cell s) of the dense basis.
    Eigen::RowVectorXd row(Index t, Index s) const
    {
        Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(cols());
        const Index m = sub_of_step(t);
        const Matrix& b = blocks[static_cast<std::size_t>(m)];
        r.segment(col_offset(m), b.cols()) = b.row((t - step_offset(m)) * n_space + s);
        return r;
    }
};

/// Tailored space-time residual basis from raw (unshifted) residual
/// snapshots, split into n_sub_r equal residual sub-windows.
inline ResidualBasis build_residual_basis(const ResidualSnapshots& snaps, double e_rs, double e_rt, Index n_sub_r = 1)
{
    if (snaps.n_res() == 0 || snaps.columns.cwiseAbs().maxCoeff() == 0.0)
        throw Error("build_residual_basis: residual snapshots are identically zero, hyper-reduction is unnecessary");
    if (n_sub_r < 1 || snaps.n_steps % n_sub_r != 0)
        throw Error("build_residual_basis: " + std::to_string(n_sub_r) + " residual sub-windows do not divide " +
                    std::to_string(snaps.n_steps) + " steps");
    const Index ns = snaps.n_space;
    const Index per = snaps.n_steps / n_sub_r;
    ResidualBasis rb;
    rb.n_space = ns;
    for (Index m = 0; m < n_sub_r; ++m)
    {
        SnapshotTensor3 t;
        t.n_space = ns;
        t.n_time = per;
        for (Index c = 0; c < snaps.n_res(); ++c)
        {
            const auto seg = snaps.columns.col(c).segment(m * per * ns, per * ns);
            t.slices.push_back(Eigen::Map<const Matrix>(seg.data(), ns, per));
        }
        if (t.all_zero())
        {
            // Nothing to represent in this part of the window; keep one
            // canonical direction so the block stays well defined.
            rb.sub_steps.push_back(per);
            rb.spatial.push_back(Matrix::Identity(ns, 1));
            rb.temporal.push_back({Matrix::Identity(per, 1)});
            rb.blocks.push_back(Matrix::Identity(ns * per, 1));
            continue;
        }
        const Matrix phi = pod_spatial(t, e_rs);
        const TemporalBases psi = tailored_temporal(t, phi, e_rt);
        const SubwindowBasis sb = assemble_subwindow_basis(phi, psi.psi);
        const QrResult qr = thin_qr(sb.assembled);
        rb.sub_steps.push_back(per);
        rb.spatial.push_back(phi);
        rb.temporal.push_back(psi.psi);
        rb.blocks.push_back(qr.Q);
    }
    return rb;
}

/// Space-time sample mesh: Cartesian product of local time indices and cells.
struct SampleMesh
{
    std::vector<Index> temporal;
    std::vector<Index> spatial;

    Index size() const { return static_cast<Index>(temporal.size() * spatial.size()); }

    /// Sampled rows t * N_s + s, ascending.
    std::vector<Index> rows(Index n_space) const
    {
        std::vector<Index> out;
        for (Index t : temporal)
            for (Index s : spatial)
                out.push_back(t * n_space + s);
        return out;
    }
};

namespace detail
{

// Orthonormal basis of a growing row space.
class RowSpace
{
public:
    explicit RowSpace(Index dim) : dim_(dim) {}

    double residual2(const Eigen::Ref<const Eigen::RowVectorXd>& x) const
    {
        if (q_.cols() == 0)
            return x.squaredNorm();
        const Eigen::RowVectorXd c = x * q_;
        return std::max(0.0, x.squaredNorm() - c.squaredNorm());
    }

    void add(const Eigen::Ref<const Eigen::RowVectorXd>& x)
    {
        const double scale = x.norm();
        if (scale == 0.0)
            return;
        Vector v = x.transpose();
        for (int pass = 0; pass < 2; ++pass)
            if (q_.cols() > 0)
                v -= q_ * (q_.transpose() * v);
        const double nrm = v.norm();
        if (nrm <= 1e-10 * scale || q_.cols() >= dim_)
            return;
        q_.conservativeResize(dim_, q_.cols() + 1);
        q_.col(q_.cols() - 1) = v / nrm;
    }

    Index rank() const { return q_.cols(); }

private:
    Index dim_;
    Matrix q_ = Matrix(0, 0);
};

inline double trace_reduction(const Matrix& a_inv, const Matrix& rows)
{
    const Matrix b = rows * a_inv;
    Matrix m = b * rows.transpose();
    m.diagonal().array() += 1.0;
    const Matrix bbt = b * b.transpose();
    return Eigen::LDLT<Matrix>(m).solve(bbt).trace();
}

}  // namespace detail

/// Two-stage greedy space-time sampling. Temporal indices are chosen first
/// from the temporal factors of the residual basis, then spatial indices
/// from the basis rows on the Cartesian product. Each pick first maximizes
/// the part of the candidate rows outside the span of rows already taken;
/// once that span is complete, it minimizes the trace of the inverse Gram
/// matrix of the sampled rows. Ties go to the smallest index.
inline SampleMesh greedy_sample_mesh(const ResidualBasis& rb, Index z_t, Index z_s)
{
    const Index ns = rb.n_space;
    const Index nt = rb.n_steps();
    const Index nr = rb.cols();
    if (z_t < 1 || z_t > nt || z_s < 1 || z_s > ns)
        throw Error("greedy_sample_mesh: need 1 <= z_t <= " + std::to_string(nt) + " and 1 <= z_s <= " +
                    std::to_string(ns) + ", got z_t=" + std::to_string(z_t) + ", z_s=" + std::to_string(z_s));
    if (z_t * z_s < nr)
        throw Error("greedy_sample_mesh: z_t*z_s = " + std::to_string(z_t * z_s) +
                    " is below the residual basis size " + std::to_string(nr));
    const double eps = 1e-10;
    SampleMesh mesh;

    // Temporal stage: factors grouped by residual sub-window.
    struct Factor
    {
        Index sub;
        const Matrix* psi;
        detail::RowSpace space;
        Matrix gram;
    };
    std::vector<Factor> factors;
    for (std::size_t m = 0; m < rb.temporal.size(); ++m)
        for (const Matrix& p : rb.temporal[m])
            factors.push_back({static_cast<Index>(m), &p, detail::RowSpace(p.cols()), Matrix::Zero(p.cols(), p.cols())});

    std::vector<bool> taken_t(static_cast<std::size_t>(nt), false);
    for (Index pick = 0; pick < z_t; ++pick)
    {
        Index best = -1;
        double best_score = -1.0;
        bool rank_stage = false;
        std::vector<double> rank_score(static_cast<std::size_t>(nt), 0.0);
        for (Index t = 0; t < nt; ++t)
        {
            if (taken_t[static_cast<std::size_t>(t)])
                continue;
            const Index m = rb.sub_of_step(t);
            const Index lt = t - rb.step_offset(m);
            double s = 0.0;
            for (const Factor& f : factors)
                if (f.sub == m)
                    s += f.space.residual2(f.psi->row(lt));
            rank_score[static_cast<std::size_t>(t)] = s;
            if (s > eps)
                rank_stage = true;
        }
        for (Index t = 0; t < nt; ++t)
        {
            if (taken_t[static_cast<std::size_t>(t)])
                continue;
            double s = rank_score[static_cast<std::size_t>(t)];
            if (!rank_stage)
            {
                const Index m = rb.sub_of_step(t);
                const Index lt = t - rb.step_offset(m);
                s = 0.0;
                for (const Factor& f : factors)
                    if (f.sub == m && f.space.rank() == f.psi->cols())
                        s += detail::trace_reduction(Eigen::LDLT<Matrix>(f.gram).solve(
                                                         Matrix::Identity(f.gram.rows(), f.gram.cols())),
                                                     f.psi->row(lt));
            }
            if (s > best_score * (1.0 + 1e-12) + 1e-300 || best < 0)
            {
                best = t;
                best_score = s;
            }
        }
        taken_t[static_cast<std::size_t>(best)] = true;
        const Index m = rb.sub_of_step(best);
        const Index lt = best - rb.step_offset(m);
        for (Factor& f : factors)
            if (f.sub == m)
            {
                f.space.add(f.psi->row(lt));
                f.gram += f.psi->row(lt).transpose() * f.psi->row(lt);
            }
    }
    for (Index t = 0; t < nt; ++t)
        if (taken_t[static_cast<std::size_t>(t)])
            mesh.temporal.push_back(t);

    // Spatial stage over the Cartesian product with the fixed time indices.
    const Matrix dense = rb.dense();
    auto candidate_rows = [&](Index s) {
        Matrix r(static_cast<Index>(mesh.temporal.size()), nr);
        for (std::size_t i = 0; i < mesh.temporal.size(); ++i)
            r.row(static_cast<Index>(i)) = dense.row(mesh.temporal[i] * ns + s);
        return r;
    };
    detail::RowSpace space(nr);
    Matrix gram = Matrix::Zero(nr, nr);
    std::vector<bool> taken_s(static_cast<std::size_t>(ns), false);
    for (Index pick = 0; pick < z_s; ++pick)
    {
        std::vector<double> rank_score(static_cast<std::size_t>(ns), 0.0);
        bool rank_stage = false;
        for (Index s = 0; s < ns; ++s)
        {
            if (taken_s[static_cast<std::size_t>(s)])
                continue;
            const Matrix r = candidate_rows(s);
            double sc = 0.0;
            for (Index i = 0; i < r.rows(); ++i)
                sc += space.residual2(r.row(i));
            rank_score[static_cast<std::size_t>(s)] = sc;
            if (sc > eps)
                rank_stage = true;
        }
        Matrix a_inv;
        if (!rank_stage)
            a_inv = Eigen::LDLT<Matrix>(gram).solve(Matrix::Identity(nr, nr));
        Index best = -1;
        double best_score = -1.0;
        for (Index s = 0; s < ns; ++s)
        {
            if (taken_s[static_cast<std::size_t>(s)])
                continue;
            const double sc = rank_stage ? rank_score[static_cast<std::size_t>(s)]
                                         : detail::trace_reduction(a_inv, candidate_rows(s));
            if (best < 0 || sc > best_score * (1.0 + 1e-12) + 1e-300)
            {
                best = s;
                best_score = sc;
            }
        }
        taken_s[static_cast<std::size_t>(best)] = true;
        const Matrix r = candidate_rows(best);
        for (Index i = 0; i < r.rows(); ++i)
            space.add(r.row(i));
        gram.noalias() += r.transpose() * r;
    }
    for (Index s = 0; s < ns; ++s)
        if (taken_s[static_cast<std::size_t>(s)])
            mesh.spatial.push_back(s);
    if (space.rank() < nr)
    {
        // Each spatial mode's temporal factor must have full column rank on
        // the chosen time indices, so z_t below the largest temporal count
        // can never work.
        Index max_nt = 0;
        for (const auto& sub : rb.temporal)
            for (const Matrix& p : sub)
                max_nt = std::max(max_nt, p.cols());
        throw Error("greedy_sample_mesh: the sampled rows reach rank " + std::to_string(space.rank()) + " of " +
                    std::to_string(nr) + " (z_t=" + std::to_string(z_t) + ", z_s=" + std::to_string(z_s) +
                    ", largest temporal factor has " + std::to_string(max_nt) + " columns); increase z_t or z_s");
    }
    return mesh;
}

/// W = (Z Pi_r)^+ restricted to the sampled rows.
inline GnatWeights gnat_weights(const SampleMesh& mesh, const ResidualBasis& rb)
{
    GnatWeights w;
    w.rows = mesh.rows(rb.n_space);
    if (static_cast<Index>(w.rows.size()) < rb.cols())
        throw Error("gnat_weights: " + std::to_string(w.rows.size()) + " samples for a residual basis of size " +
                    std::to_string(rb.cols()) + "; increase z_t or z_s");
    Matrix zp(static_cast<Index>(w.rows.size()), rb.cols());
    Index i = 0;
    for (Index t : mesh.temporal)
        for (Index s : mesh.spatial)
            zp.row(i++) = rb.row(t, s);
    const SvdResult svd = thin_svd(zp);
    const double smin = svd.singular_values(svd.singular_values.size() - 1);
    if (!(smin > 1e-10))
        throw Error("gnat_weights: sampled residual basis is rank deficient (smallest singular value " +
                    std::to_string(smin) + "); increase z_t or z_s");
    w.op = svd.V * svd.singular_values.cwiseInverse().asDiagonal() * svd.U.transpose();
    return w;
}

/// Offline data for evaluating the residual of one window on a sample mesh:
/// which state entries the sampled rows touch and the basis rows that
/// reconstruct them.
template <Model M>
class GnatWindowData
{
public:
    GnatWindowData(const M& model, const WindowPlan& plan, Index k, const WindowBasis& basis, const SampleMesh& mesh,
                   GnatWeights weights)
        : ns_(model.size()), weights_(std::move(weights))
    {
        const Index nt = plan.window_steps(k);
        if (basis.n_steps() != nt || basis.n_space() != ns_)
            throw Error("GnatWindowData: basis does not match window " + std::to_string(k));
        std::map<Index, std::vector<Index>> need;  // time -> cells
        std::vector<Index> cells;
        for (Index t : mesh.temporal)
        {
            const LmmStep c = window_step(plan, t);
            for (Index s : mesh.spatial)
            {
                Row row;
                row.t = t;
                row.s = s;
                for (int i = 0; i <= c.width; ++i)
                {
                    const Index src = t - i;
                    const double a = c.alpha[static_cast<std::size_t>(i)];
                    const double b = c.beta[static_cast<std::size_t>(i)];
                    if (a == 0.0 && b == 0.0)
                        continue;
                    row.terms.push_back({src, a, b, {}});
                    if (src < 0)
                        continue;
                    need[src].push_back(s);
                    if (b != 0.0)
                    {
                        model.stencil(s, cells);
                        for (Index cc : cells)
                            need[src].push_back(cc);
                    }
                }
                rows_.push_back(std::move(row));
            }
        }
        // Compact list of (time, cell) state entries.
        for (auto& [t, cs] : need)
        {
            std::sort(cs.begin(), cs.end());
            cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
            slot_of_time_[t] = static_cast<Index>(times_.size());
            times_.push_back(t);
            for (Index c : cs)
            {
                index_[{t, c}] = static_cast<Index>(entries_.size());
                entries_.push_back({t, c});
                entry_slot_.push_back(slot_of_time_[t]);
            }
        }
        pi_rows_.resize(static_cast<Index>(entries_.size()), basis.cols());
        std::vector<double> buf(static_cast<std::size_t>(basis.cols()));
        for (std::size_t e = 0; e < entries_.size(); ++e)
        {
            basis.row(entries_[e].first, entries_[e].second, buf.data());
            pi_rows_.row(static_cast<Index>(e)) = Eigen::Map<const Eigen::RowVectorXd>(buf.data(), basis.cols());
        }
        for (Row& row : rows_)
            for (Term& term : row.terms)
            {
                if (term.src < 0)
                    continue;
                term.self = index_.at({term.src, row.s});
                term.slot = slot_of_time_.at(term.src);
                if (term.beta != 0.0)
                {
                    model.stencil(row.s, cells);
                    max_stencil_ = std::max(max_stencil_, cells.size());
                    for (Index cc : cells)
                        term.stencil.push_back(index_.at({term.src, cc}));
                }
            }
        dt_ = plan.dt();
        cols_ = basis.cols();
    }

    Index cols() const { return cols_; }
    Index n_entries() const { return static_cast<Index>(entries_.size()); }
    const GnatWeights& weights() const { return weights_; }

    /// Sampled residual and Jacobian rows, before weighting.
    void sampled(const M& model, const Vector& incoming, const Vector& y, Vector& rz, Matrix* jz) const
    {
        const Index nz = static_cast<Index>(rows_.size());
        Vector vals = pi_rows_ * y;
        std::vector<Vector>& scratch = scratch_;
        scratch.resize(times_.size());
        for (std::size_t i = 0; i < times_.size(); ++i)
            if (scratch[i].size() != ns_)
                scratch[i] = Vector::Zero(ns_);
        for (std::size_t e = 0; e < entries_.size(); ++e)
        {
            vals(static_cast<Index>(e)) += incoming(entries_[e].second);
            scratch[static_cast<std::size_t>(entry_slot_[e])](entries_[e].second) = vals(static_cast<Index>(e));
        }
        rz.resize(nz);
        if (jz)
            jz->setZero(nz, cols_);
        std::vector<double>& dbuf = dbuf_;
        dbuf.resize(std::max<std::size_t>(max_stencil_, 1));
        double* d = dbuf.data();
        for (Index i = 0; i < nz; ++i)
        {
            const Row& row = rows_[static_cast<std::size_t>(i)];
            double r = 0.0;
            for (const Term& term : row.terms)
            {
                if (term.src < 0)
                {
                    r += term.alpha * incoming(row.s);
                    if (term.beta != 0.0)
                        r -= dt_ * term.beta * model.velocity_row(row.s, incoming, nullptr);
                    continue;
                }
                r += term.alpha * vals(term.self);
                if (jz && term.alpha != 0.0)
                    jz->row(i) += term.alpha * pi_rows_.row(term.self);
                if (term.beta != 0.0)
                {
                    const Vector& u = scratch[static_cast<std::size_t>(term.slot)];
                    r -= dt_ * term.beta * model.velocity_row(row.s, u, jz ? d : nullptr);
                    if (jz)
                        for (std::size_t c = 0; c < term.stencil.size(); ++c)
                            jz->row(i) -= (dt_ * term.beta * d[c]) * pi_rows_.row(term.stencil[c]);
                }
            }
            rz(i) = r;
        }
    }

private:
    struct Term
    {
        Index src;
        double alpha;
        double beta;
        std::vector<Index> stencil;
        Index self = -1;
        Index slot = -1;
    };
    struct Row
    {
        Index t = 0;
        Index s = 0;
        std::vector<Term> terms;
    };

    Index ns_;
    Index cols_ = 0;
    double dt_ = 0.0;
    GnatWeights weights_;
    std::vector<Row> rows_;
    std::vector<Index> times_;
    std::map<Index, Index> slot_of_time_;
    std::map<std::pair<Index, Index>, Index> index_;
    std::vector<std::pair<Index, Index>> entries_;
    std::vector<Index> entry_slot_;
    Matrix pi_rows_;
    std::size_t max_stencil_ = 0;
    mutable std::vector<Vector> scratch_;
    mutable std::vector<double> dbuf_;
};

template <Model M>
class GnatWindowEvaluator
{
public:
    GnatWindowEvaluator(const M& model, const GnatWindowData<M>& data, Vector incoming)
        : model_(model), data_(data), incoming_(std::move(incoming))
    {
    }

    Index cols() const { return data_.cols(); }

    void evaluate(const Vector& y, Vector& r, Matrix* jac)
    {
        data_.sampled(model_, incoming_, y, rz_, jac ? &jz_ : nullptr);
        r.noalias() = data_.weights().op * rz_;
        if (jac)
            jac->noalias() = data_.weights().op * jz_;
    }

private:
    const M& model_;
    const GnatWindowData<M>& data_;
    Vector incoming_;
    Vector rz_;
    Matrix jz_;
};

/// WST-GNAT online solve: the weighted minimization evaluated on the sample
/// mesh only.
template <Model M>
RomSolution solve_wst_gnat(const M& model, const std::vector<WindowBasis>& bases,
                           const std::vector<GnatWindowData<M>>& data, const WindowPlan& plan, const Vector& u0,
                           const GuessFn& guess, const GaussNewtonConfig& cfg)
{
    if (static_cast<Index>(data.size()) != plan.n_windows())
        throw Error("solve_wst_gnat: hyper-reduction data does not cover every window");
    return window_loop(bases, plan, u0, guess, cfg, [&](Index k, const Vector& incoming) {
        return GnatWindowEvaluator<M>(model, data[static_cast<std::size_t>(k)], incoming);
    });
}

}  // namespace wst

#endif  // WST_HYPER_HPP_
