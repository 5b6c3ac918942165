// Copyright 2026 The wst-lspg Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WST_TEST_UTIL_HPP_
#define WST_TEST_UTIL_HPP_

#include <random>

#include "wst/burgers.hpp"
#include "wst/densekit.hpp"

namespace wst::testing
{

inline Matrix random_matrix(Index r, Index c, unsigned seed, double lo = -1.0, double hi = 1.0)
{
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i)
            m(i, j) = u(gen);
    return m;
}

inline Vector random_vector(Index n, unsigned seed, double lo = -1.0, double hi = 1.0)
{
    return random_matrix(n, 1, seed, lo, hi);
}

inline double orth_error(const Matrix& q)
{
    return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).norm();
}

/// Reduced Burgers setup: 50 cells of width 0.5, 64 steps of 0.1.
inline SpatialGrid small_grid() { return SpatialGrid(50, 0.0, 25.0); }
constexpr Index kSmallSteps = 64;

inline std::vector<Parameters> small_params(Index n1 = 3, Index n2 = 2)
{
    return sample_parameter_grid({2.0, 4.1, n1}, {0.013, 0.02, n2});
}

inline std::vector<Trajectory> small_trajectories(const std::vector<Parameters>& params, Index n_steps = kSmallSteps,
                                                  const LmmScheme& scheme = LmmScheme::bdf1())
{
    std::vector<Trajectory> out;
    for (const Parameters& p : params)
        out.push_back(fom_march(p, small_grid(), 0.1, n_steps, scheme));
    return out;
}

}  // namespace wst::testing

#endif  // WST_TEST_UTIL_HPP_
