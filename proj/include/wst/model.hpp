// Copyright 2026 The wst-lspg Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WST_MODEL_HPP_
#define WST_MODEL_HPP_

#include <concepts>
#include <vector>

#include "wst/densekit.hpp"

namespace wst
{

/// A semi-discrete system du/dt = f(u). Besides the full velocity and its
/// sparse Jacobian, a model exposes row-wise evaluation so that sampled
/// (hyper-reduced) residuals can be formed from a handful of cells.
///
/// stencil(i, cells) lists the state entries that f_i depends on, and
/// velocity_row(i, u, d) returns f_i(u) reading only those entries of u,
/// writing df_i/du_cells[j] to d[j] when d is not null.
template <class M>
concept Model = requires(const M& m, const Vector& u, Vector& f, SparseMatrix& jac, Index i,
                         std::vector<Index>& cells, double* d) {
    { m.size() } -> std::convertible_to<Index>;
    m.velocity(u, f);
    m.jacobian(u, jac);
    m.stencil(i, cells);
    { m.velocity_row(i, u, d) } -> std::convertible_to<double>;
};

/// Affine model f(u) = M u + c. Used for oracles and the linear test problems.
class LinearModel
{
public:
    LinearModel(Matrix m, Vector c) : m_(std::move(m)), c_(std::move(c))
    {
        if (m_.rows() != m_.cols() || m_.rows() != c_.size())
            throw Error("LinearModel: operator " + detail::dims(m_.rows(), m_.cols()) + " and offset length " +
                        std::to_string(c_.size()) + " disagree");
        sparse_ = m_.sparseView();
        sparse_.makeCompressed();
        cells_.resize(static_cast<std::size_t>(m_.rows()));
        for (Index i = 0; i < m_.rows(); ++i)
            for (SparseMatrix::InnerIterator it(sparse_, i); it; ++it)
                cells_[static_cast<std::size_t>(i)].push_back(it.col());
    }

    explicit LinearModel(Matrix m) : LinearModel(m, Vector::Zero(m.rows())) {}

    static LinearModel zero(Index n) { return LinearModel(Matrix::Zero(n, n)); }

    Index size() const { return m_.rows(); }
    const Matrix& matrix() const { return m_; }
    const Vector& offset() const { return c_; }

    void velocity(const Vector& u, Vector& f) const { f.noalias() = sparse_ * u + c_; }
    void jacobian(const Vector&, SparseMatrix& jac) const { jac = sparse_; }

    void stencil(Index i, std::vector<Index>& cells) const { cells = cells_[static_cast<std::size_t>(i)]; }

    double velocity_row(Index i, const Vector& u, double* d) const
    {
        double s = c_(i);
        Index j = 0;
        for (SparseMatrix::InnerIterator it(sparse_, i); it; ++it, ++j)
        {
            s += it.value() * u(it.col());
            if (d)
                d[j] = it.value();
        }
        return s;
    }

private:
    Matrix m_;
    Vector c_;
    SparseMatrix sparse_;
    std::vector<std::vector<Index>> cells_;
};

}  // namespace wst

#endif  // WST_MODEL_HPP_
