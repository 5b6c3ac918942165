// Copyright 2026 The wst-lspg Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WST_DENSEKIT_HPP_
#define WST_DENSEKIT_HPP_

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wst
{

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

namespace detail
{

inline std::string dims(Index rows, Index cols)
{
    std::ostringstream os;
    os << rows << "x" << cols;
    return os.str();
}

template <class Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what)
{
    if (!m.allFinite())
        throw Error(std::string(what) + ": non-finite entry in " + dims(m.rows(), m.cols()) + " input");
}

// Householder QR written out column by column. Used only to precondition the
// Jacobi SVD so that it stays independent of the library QR used elsewhere.
inline void householder_qr(const Matrix& a, Matrix& q, Matrix& r)
{
    const Index m = a.rows();
    const Index n = a.cols();
    Matrix work = a;
    std::vector<Vector> reflectors;
    std::vector<double> taus;
    reflectors.reserve(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j)
    {
        auto x = work.col(j).tail(m - j);
        const double alpha = x.norm();
        Vector v = x;
        double tau = 0.0;
        if (alpha > 0.0)
        {
            const double beta = x(0) >= 0.0 ? -alpha : alpha;
            v(0) -= beta;
            const double vnorm2 = v.squaredNorm();
            if (vnorm2 > 0.0)
            {
                tau = 2.0 / vnorm2;
                auto block = work.bottomRightCorner(m - j, n - j);
                Eigen::RowVectorXd w = v.transpose() * block;
                block.noalias() -= tau * v * w;
            }
        }
        reflectors.push_back(std::move(v));
        taus.push_back(tau);
    }
    r = work.topRows(n).triangularView<Eigen::Upper>();
    q = Matrix::Identity(m, n);
    for (Index j = n - 1; j >= 0; --j)
    {
        const Vector& v = reflectors[static_cast<std::size_t>(j)];
        const double tau = taus[static_cast<std::size_t>(j)];
        if (tau == 0.0)
            continue;
        auto block = q.bottomRows(m - j);
        Eigen::RowVectorXd w = v.transpose() * block;
        block.noalias() -= tau * v * w;
    }
}

// Completes the columns of u flagged in `missing` so that u has orthonormal
// columns, using canonical vectors orthogonalized against the others.
inline void complete_orthonormal(Matrix& u, const std::vector<bool>& missing)
{
    const Index m = u.rows();
    Index candidate = 0;
    for (Index j = 0; j < u.cols(); ++j)
    {
        if (!missing[static_cast<std::size_t>(j)])
            continue;
        bool placed = false;
        while (!placed && candidate < m)
        {
            Vector e = Vector::Unit(m, candidate++);
            for (int pass = 0; pass < 2; ++pass)
                for (Index i = 0; i < u.cols(); ++i)
                    if (i != j && !missing[static_cast<std::size_t>(i)])
                        e -= u.col(i).dot(e) * u.col(i);
            const double nrm = e.norm();
            if (nrm > 1e-8)
            {
                u.col(j) = e / nrm;
                placed = true;
            }
        }
        if (!placed)
            throw Error("thin_svd: cannot complete orthonormal basis of size " + dims(u.rows(), u.cols()));
    }
}

}  // namespace detail

/// Thin singular value decomposition m = U diag(s) V^T.
struct SvdResult
{
    Matrix U;
    Vector singular_values;
    Matrix V;
};

/// One-sided (Hestenes) Jacobi SVD of a square or tall matrix. Tall inputs
/// are first reduced to their triangular factor; wide inputs are handled
/// through the transpose. Each left singular vector is sign-normalized so its
/// largest-magnitude entry is positive (V follows along), which keeps the
/// output reproducible bit for bit.
inline SvdResult thin_svd(const Matrix& m, int max_sweeps = 80)
{
    if (m.size() == 0)
        throw Error("thin_svd: empty matrix");
    detail::require_finite(m, "thin_svd");

    if (m.rows() < m.cols())
    {
        SvdResult t = thin_svd(m.transpose(), max_sweeps);
        SvdResult out{std::move(t.V), std::move(t.singular_values), std::move(t.U)};
        for (Index j = 0; j < out.U.cols(); ++j)
        {
            Index imax = 0;
            out.U.col(j).cwiseAbs().maxCoeff(&imax);
            if (out.U(imax, j) < 0.0)
            {
                out.U.col(j) *= -1.0;
                out.V.col(j) *= -1.0;
            }
        }
        return out;
    }

    const Index rows = m.rows();
    const Index n = m.cols();
    Matrix q;
    Matrix work;
    const bool reduced = rows > n;
    if (reduced)
        detail::householder_qr(m, q, work);
    else
        work = m;

    Matrix v = Matrix::Identity(n, n);
    const double eps = std::numeric_limits<double>::epsilon();
    bool converged = (n == 1);
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep)
    {
        bool rotated = false;
        for (Index p = 0; p < n - 1; ++p)
        {
            for (Index qi = p + 1; qi < n; ++qi)
            {
                const double alpha = work.col(p).squaredNorm();
                const double beta = work.col(qi).squaredNorm();
                const double gamma = work.col(p).dot(work.col(qi));
                if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta))
                    continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (Index i = 0; i < n; ++i)
                {
                    const double wp = work(i, p);
                    const double wq = work(i, qi);
                    work(i, p) = c * wp - s * wq;
                    work(i, qi) = s * wp + c * wq;
                    const double vp = v(i, p);
                    const double vq = v(i, qi);
                    v(i, p) = c * vp - s * vq;
                    v(i, qi) = s * vp + c * vq;
                }
            }
        }
        converged = !rotated;
    }
    if (!converged)
        throw Error("thin_svd: Jacobi sweeps did not converge for " + detail::dims(rows, n) + " matrix");

    Vector sigma(n);
    for (Index j = 0; j < n; ++j)
        sigma(j) = work.col(j).norm();
    std::vector<Index> order(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j)
        order[static_cast<std::size_t>(j)] = j;
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return sigma(a) > sigma(b); });

    SvdResult out;
    out.singular_values.resize(n);
    Matrix u_small(n, n);
    out.V.resize(n, n);
    std::vector<bool> missing(static_cast<std::size_t>(n), false);
    const double floor = sigma.maxCoeff() * static_cast<double>(std::max(rows, n)) * eps;
    for (Index j = 0; j < n; ++j)
    {
        const Index src = order[static_cast<std::size_t>(j)];
        const double s = sigma(src);
        out.V.col(j) = v.col(src);
        if (s > floor && s > 0.0)
        {
            out.singular_values(j) = s;
            u_small.col(j) = work.col(src) / s;
        }
        else
        {
            out.singular_values(j) = s <= floor ? 0.0 : s;
            u_small.col(j).setZero();
            missing[static_cast<std::size_t>(j)] = true;
        }
    }
    if (std::any_of(missing.begin(), missing.end(), [](bool b) { return b; }))
        detail::complete_orthonormal(u_small, missing);
    out.U = reduced ? Matrix(q * u_small) : u_small;

    for (Index j = 0; j < n; ++j)
    {
        Index imax = 0;
        out.U.col(j).cwiseAbs().maxCoeff(&imax);
        if (out.U(imax, j) < 0.0)
        {
            out.U.col(j) *= -1.0;
            out.V.col(j) *= -1.0;
        }
    }
    return out;
}

/// Thin QR factorization together with a report of near-zero pivots.
struct QrResult
{
    Matrix Q;
    Matrix R;
    /// Columns j with |R(j,j)| below the rank tolerance.
    std::vector<Index> deficient_columns;

    bool full_rank() const { return deficient_columns.empty(); }
};

namespace detail
{

inline double rank_tolerance(const Matrix& r)
{
    const double scale = r.rows() > 0 ? r.diagonal().cwiseAbs().maxCoeff() : 0.0;
    return 1e-12 * std::max(1.0, scale);
}

inline std::vector<Index> deficient_pivots(const Matrix& r)
{
    std::vector<Index> out;
    const double tol = rank_tolerance(r);
    for (Index j = 0; j < r.cols(); ++j)
        if (std::abs(r(j, j)) < tol)
            out.push_back(j);
    return out;
}

}  // namespace detail

inline QrResult thin_qr(const Matrix& m)
{
    if (m.rows() < m.cols())
        throw Error("thin_qr: needs rows >= cols, got " + detail::dims(m.rows(), m.cols()));
    detail::require_finite(m, "thin_qr");
    Eigen::HouseholderQR<Matrix> qr(m);
    QrResult out;
    out.Q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
    out.R = qr.matrixQR().topRows(m.cols()).triangularView<Eigen::Upper>();
    out.deficient_columns = detail::deficient_pivots(out.R);
    return out;
}

struct LeastSquaresResult
{
    Vector x;
    /// True when the QR pivots flagged rank deficiency.
    bool rank_deficient = false;
    /// True when the minimum-norm SVD route produced x.
    bool used_svd = false;
};

/// Moore-Penrose inverse, dropping singular values below rel_tol * sigma_0.
inline Matrix pseudo_inverse(const Matrix& m, double rel_tol = 1e-12)
{
    if (!(rel_tol > 0.0 && rel_tol < 1.0))
        throw Error("pseudo_inverse: rel_tol must lie in (0, 1)");
    const SvdResult svd = thin_svd(m);
    const double cut = rel_tol * svd.singular_values(0);
    Vector inv = Vector::Zero(svd.singular_values.size());
    for (Index i = 0; i < inv.size(); ++i)
        if (svd.singular_values(i) > cut && svd.singular_values(i) > 0.0)
            inv(i) = 1.0 / svd.singular_values(i);
    return svd.V * inv.asDiagonal() * svd.U.transpose();
}

/// Solves min ||a x - b|| by Householder QR computed in place in `a`
/// (its contents are destroyed). No fallback: rank deficiency is only
/// reported, x then holds the QR solution with deficient pivots skipped.
inline LeastSquaresResult qr_least_squares_inplace(Matrix& a, const Vector& b)
{
    if (a.rows() < a.cols())
        throw Error("least_squares: needs rows >= cols, got " + detail::dims(a.rows(), a.cols()));
    if (b.size() != a.rows())
        throw Error("least_squares: rhs length " + std::to_string(b.size()) + " does not match " +
                    detail::dims(a.rows(), a.cols()));
    Eigen::HouseholderQR<Eigen::Ref<Matrix>> qr(a);
    const Index n = a.cols();
    Vector qtb = b;
    qtb.applyOnTheLeft(qr.householderQ().transpose());
    LeastSquaresResult out;
    const Matrix& r = qr.matrixQR();
    const double tol = 1e-12 * std::max(1.0, n > 0 ? r.diagonal().cwiseAbs().maxCoeff() : 0.0);
    for (Index j = 0; j < n; ++j)
        if (std::abs(r(j, j)) < tol)
            out.rank_deficient = true;
    out.x = Vector::Zero(n);
    for (Index j = n - 1; j >= 0; --j)
    {
        if (std::abs(r(j, j)) < tol)
            continue;
        double s = qtb(j);
        for (Index c = j + 1; c < n; ++c)
            s -= r(j, c) * out.x(c);
        out.x(j) = s / r(j, j);
    }
    return out;
}

/// Linear least squares via QR; rank-deficient systems fall back to the
/// minimum-norm solution through the SVD.
inline LeastSquaresResult least_squares(const Matrix& a, const Vector& b)
{
    detail::require_finite(a, "least_squares");
    detail::require_finite(b, "least_squares");
    Matrix work = a;
    LeastSquaresResult out = qr_least_squares_inplace(work, b);
    if (out.rank_deficient)
    {
        out.x = pseudo_inverse(a) * b;
        out.used_svd = true;
    }
    return out;
}

/// Number of leading singular values needed to retain the energy fraction
/// `fraction` (sum of squares). fraction == 1 keeps every value above
/// 1e-12 * sigma_0. At least one value is always kept.
inline Index energy_count(const Vector& sigma, double fraction)
{
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw Error("energy fraction must lie in (0, 1], got " + std::to_string(fraction));
    if (sigma.size() == 0)
        return 0;
    const double cut = 1e-12 * sigma(0);
    Index nonzero = 0;
    for (Index i = 0; i < sigma.size(); ++i)
        if (sigma(i) > cut)
            ++nonzero;
    if (fraction >= 1.0)
        return std::max<Index>(1, nonzero);
    const double total = sigma.squaredNorm();
    if (total == 0.0)
        return 1;
    double acc = 0.0;
    for (Index i = 0; i < sigma.size(); ++i)
    {
        acc += sigma(i) * sigma(i);
        if (acc >= fraction * total)
            return std::max<Index>(1, std::min(i + 1, std::max<Index>(1, nonzero)));
    }
    return std::max<Index>(1, nonzero);
}

}  // namespace wst

#endif  // WST_DENSEKIT_HPP_
