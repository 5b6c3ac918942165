// Copyright 2026 The wst-lspg Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "wst/metrics.hpp"
#include "wst/solver.hpp"

using namespace wst;
using wst::testing::random_matrix;
using wst::testing::random_vector;

namespace
{

std::vector<DenseBasis> identity_bases(const WindowPlan& plan, Index ns)
{
    std::vector<DenseBasis> out;
    for (Index k = 0; k < plan.n_windows(); ++k)
        out.emplace_back(Matrix::Identity(ns * plan.window_steps(k), ns * plan.window_steps(k)), ns);
    return out;
}

struct SmallStudy
{
    std::vector<Parameters> params = wst::testing::small_params(3, 2);
    std::vector<Trajectory> trajs;
    Parameters test{3.4, 0.0165};
    Trajectory fom;

    explicit SmallStudy(Index n_steps = wst::testing::kSmallSteps)
    {
        trajs = wst::testing::small_trajectories(params, n_steps);
        fom = fom_march(test, wst::testing::small_grid(), 0.1, n_steps);
    }
};

}  // namespace

TEST(ReferenceStateTest, Examples)
{
    Vector in(2);
    in << 1, 2;
    Vector expected(6);
    expected << 1, 2, 1, 2, 1, 2;
    EXPECT_EQ(window_reference_state(in, 3), expected);
    EXPECT_TRUE(window_reference_state(Vector::Zero(4), 5).isZero(0.0));
    EXPECT_EQ(window_reference_state(Vector::Ones(3), 2), Vector::Ones(6));
}

TEST(ReconstructStateTest, Examples)
{
    const Vector in = random_vector(3, 1);
    const WindowBasis basis(3, {thin_qr(random_matrix(12, 4, 2)).Q});
    // y = 0 gives the reference block
    const Matrix zero = reconstruct_state(basis, in, Vector::Zero(4));
    for (Index j = 0; j < 4; ++j)
        EXPECT_EQ(Vector(zero.col(j)), in);
    // y = Pi^T (x - ref) gives the least-squares reconstruction of x
    const Vector x = random_vector(12, 3);
    const Vector ref = window_reference_state(in, 4);
    const Matrix pi = basis.dense();
    const Vector y = pi.transpose() * (x - ref);
    const Matrix rec = reconstruct_state(basis, in, y);
    const Vector ls = ref + pi * least_squares(pi, x - ref).x;
    EXPECT_LT((Eigen::Map<const Vector>(rec.data(), rec.size()) - ls).norm(), 1e-13);
    // identity basis: reference plus y reshaped
    const DenseBasis id(Matrix::Identity(12, 12), 3);
    const Matrix r2 = reconstruct_state(id, in, x);
    for (Index j = 0; j < 4; ++j)
        EXPECT_EQ(Vector(r2.col(j)), Vector(x.segment(j * 3, 3) + in));
}

TEST(GaussNewtonTest, LinearProblemConvergesInOneStep)
{
    const Index ns = 3;
    const LinearModel model(random_matrix(ns, ns, 5), random_vector(ns, 6));
    const WindowPlan plan(4, 0.1, {{4}});
    const DenseBasis basis(Matrix::Identity(12, 12), ns);
    FullWindowEvaluator<LinearModel, DenseBasis> ev(model, plan, 0, basis, random_vector(ns, 7));
    WindowSolveReport rep;
    GaussNewtonConfig cfg;
    gauss_newton(ev, Vector::Zero(12), cfg, rep);
    ASSERT_GE(rep.residual_norms.size(), 2u);
    EXPECT_LE(rep.residual_norms[1], 1e-10);
    EXPECT_TRUE(rep.converged);
    EXPECT_EQ(rep.gradient_norms.size(), static_cast<std::size_t>(rep.iterations));
}

TEST(GaussNewtonTest, ScalarDecayMatchesImplicitEuler)
{
    const LinearModel model(Matrix::Constant(1, 1, -1.0));
    const WindowPlan plan(6, 0.1, {{3}, {3}});
    const RomSolution sol = solve_wst_lspg(model, identity_bases(plan, 1), plan, Vector::Ones(1), nullptr, {});
    for (Index n = 1; n <= 6; ++n)
        EXPECT_NEAR(sol.trajectory.state(n)(0), std::pow(1.0 / 1.1, static_cast<double>(n)), 1e-9);
}

TEST(GaussNewtonTest, OptimalGuessStopsImmediately)
{
    const LinearModel model(Matrix::Constant(1, 1, -1.0));
    const WindowPlan plan(3, 0.1, {{3}});
    const auto bases = identity_bases(plan, 1);
    const RomSolution first = solve_wst_lspg(model, bases, plan, Vector::Ones(1), nullptr, {});
    const Vector y = first.coords[0];
    const RomSolution again =
        solve_wst_lspg(model, bases, plan, Vector::Ones(1), [&](Index) { return y; }, {});
    EXPECT_EQ(again.reports[0].iterations, 1);
    EXPECT_TRUE(again.reports[0].converged);
    EXPECT_TRUE(again.reports[0].step_norms.empty());
    EXPECT_EQ(again.coords[0], y);
}

TEST(GaussNewtonTest, ConfigValidation)
{
    GaussNewtonConfig cfg;
    cfg.tol = 0.0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = {};
    cfg.max_iters = 0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = {};
    cfg.shrink = 1.0;
    EXPECT_THROW(cfg.validate(), Error);
    EXPECT_EQ(parse_line_search("backtracking"), LineSearch::backtracking);
    EXPECT_THROW(parse_line_search("wolfe"), Error);
}

TEST(GaussNewtonTest, RankDeficiencyNamesTheWindow)
{
    const Index ns = 2;
    const LinearModel model(-Matrix::Identity(ns, ns));
    const WindowPlan plan(4, 0.1, {{2}, {2}});
    Matrix m = random_matrix(4, 2, 3);
    m.col(1) = m.col(0);
    const std::vector<DenseBasis> bases{DenseBasis(Matrix::Identity(4, 4), ns), DenseBasis(m, ns)};
    try
    {
        solve_wst_lspg(model, bases, plan, Vector::Ones(ns), nullptr, {});
        FAIL() << "expected a rank-deficiency error";
    }
    catch (const Error& e)
    {
        EXPECT_NE(std::string(e.what()).find("window 1"), std::string::npos) << e.what();
    }
}

TEST(WindowLoopTest, DivergencePolicy)
{
    SmallStudy s(16);
    const WindowPlan plan = WindowPlan::uniform(16, 0.1, 0.8, 0.8);
    const TrainedBases b = train_bases(s.trajs, plan, 0.99, 0.99);
    const BurgersModel model(wst::testing::small_grid(), s.test);
    GaussNewtonConfig cfg;
    cfg.max_iters = 1;
    try
    {
        solve_wst_lspg(model, b.windows, plan, Vector::Ones(50), nullptr, cfg);
        FAIL() << "expected divergence";
    }
    catch (const DivergenceError& e)
    {
        EXPECT_EQ(e.window(), 0);
        EXPECT_EQ(e.partial().reports.size(), 1u);
        EXPECT_FALSE(e.partial().converged);
    }
    cfg.abort_on_divergence = false;
    const RomSolution sol = solve_wst_lspg(model, b.windows, plan, Vector::Ones(50), nullptr, cfg);
    EXPECT_FALSE(sol.converged);
    EXPECT_EQ(sol.reports.size(), 2u);
}

TEST(WindowLoopTest, IdentityBasisReproducesFom)
{
    SmallStudy s;
    const WindowPlan plan = WindowPlan::uniform(wst::testing::kSmallSteps, 0.1, 0.8, 0.4);
    const BurgersModel model(wst::testing::small_grid(), s.test);
    GaussNewtonConfig cfg;
    cfg.tol = 1e-10;
    const RomSolution sol = solve_wst_lspg(model, identity_bases(plan, 50), plan, Vector::Ones(50), nullptr, cfg);
    EXPECT_TRUE(sol.converged);
    EXPECT_LE(mse(sol.trajectory, s.fom), 1e-8);
}

TEST(WindowLoopTest, TrainingParameterRecoveredAtFullEnergy)
{
    SmallStudy s;
    const WindowPlan plan = WindowPlan::uniform(wst::testing::kSmallSteps, 0.1, 0.1, 0.1);
    const TrainedBases b = train_bases(s.trajs, plan, 1.0, 1.0);
    const InitialGuessModel g = fit_initial_guess(b, s.trajs, s.params);
    const Parameters p = s.params[2];
    const BurgersModel model(wst::testing::small_grid(), p);
    const RomSolution sol =
        solve_wst_lspg(model, b.windows, plan, Vector::Ones(50), regression_guess(g, p), GaussNewtonConfig{});
    EXPECT_LE(mse(sol.trajectory, s.trajs[2]), 1e-6);
}

TEST(WindowLoopTest, ContinuityAcrossWindows)
{
    SmallStudy s(32);
    const WindowPlan plan = WindowPlan::uniform(32, 0.1, 0.8, 0.4);
    const TrainedBases b = train_bases(s.trajs, plan, 0.999, 0.99);
    const InitialGuessModel g = fit_initial_guess(b, s.trajs, s.params);
    const BurgersModel model(wst::testing::small_grid(), s.test);
    const RomSolution sol = solve_wst_lspg(model, b.windows, plan, Vector::Ones(50), regression_guess(g, s.test), {});
    ASSERT_EQ(sol.coords.size(), static_cast<std::size_t>(plan.n_windows()));
    for (Index k = 1; k < plan.n_windows(); ++k)
    {
        const Vector in = sol.trajectory.state(plan.phi(k) - 1);
        const Matrix block = reconstruct_state(b.windows[static_cast<std::size_t>(k)], in,
                                               sol.coords[static_cast<std::size_t>(k)]);
        // bitwise: the stored state of the previous window is the reference
        EXPECT_EQ(block, sol.trajectory.block(plan.phi(k), plan.window_steps(k))) << k;
    }
}

TEST(WindowLoopTest, MonotoneObjectiveAndOptimalityCertificate)
{
    SmallStudy s;
    const WindowPlan plan = WindowPlan::uniform(wst::testing::kSmallSteps, 0.1, 1.6, 0.4);
    const TrainedBases b = train_bases(s.trajs, plan, 0.99, 0.9);
    const BurgersModel model(wst::testing::small_grid(), s.test);
    for (LineSearch ls : {LineSearch::backtracking, LineSearch::unit_step})
    {
        GaussNewtonConfig cfg;
        cfg.line_search = ls;
        // cold start (y = 0) so the line search has real work to do
        const RomSolution sol = solve_wst_lspg(model, b.windows, plan, Vector::Ones(50), nullptr, cfg);
        ASSERT_TRUE(sol.converged);
        for (const WindowSolveReport& rep : sol.reports)
        {
            for (std::size_t i = 1; i < rep.residual_norms.size(); ++i)
                EXPECT_LE(rep.residual_norms[i], rep.residual_norms[i - 1] * (1.0 + 1e-10));
            EXPECT_LE(rep.gradient_norms.back(), cfg.tol * std::max(1.0, rep.gradient_norms.front()));
            EXPECT_EQ(rep.gradient_norms.size(), static_cast<std::size_t>(rep.iterations));
        }
    }
}

TEST(StLspgTest, SingleWindowMatchesDenseReferencePath)
{
    SmallStudy s(32);
    const WindowPlan plan = WindowPlan::uniform(32, 0.1, 3.2, 3.2);
    ASSERT_TRUE(plan.single_window());
    const TrainedBases b = train_bases(s.trajs, plan, 0.999, 0.99);
    const InitialGuessModel g = fit_initial_guess(b, s.trajs, s.params);
    const BurgersModel model(wst::testing::small_grid(), s.test);
    GaussNewtonConfig cfg;
    const RomSolution sol = solve_wst_lspg(model, b.windows, plan, Vector::Ones(50), regression_guess(g, s.test), cfg);
    const WindowSolveReport ref = solve_st_lspg_dense(model, b.windows[0].dense(), Vector::Ones(50), 0.1, 32,
                                                      plan.scheme(), g.predict(s.test, 0), cfg);
    const WindowSolveReport& rep = sol.reports[0];
    ASSERT_EQ(rep.iterates.size(), ref.iterates.size());
    EXPECT_EQ(rep.iterations, ref.iterations);
    for (std::size_t i = 0; i < ref.iterates.size(); ++i)
        EXPECT_LE((rep.iterates[i] - ref.iterates[i]).norm(), 1e-12 * std::max(1.0, ref.iterates[i].norm())) << i;
    EXPECT_NEAR(rep.final_residual_norm, ref.final_residual_norm, 1e-12 * std::max(1.0, ref.final_residual_norm));
}

TEST(StLspgTest, Bdf2SingleWindowMatchesDenseReferencePath)
{
    const LmmScheme bdf2 = LmmScheme::bdf2();
    const std::vector<Parameters> params = wst::testing::small_params(3, 2);
    const std::vector<Trajectory> trajs = wst::testing::small_trajectories(params, 16, bdf2);
    const WindowPlan plan = WindowPlan::uniform(16, 0.1, 1.6, 1.6, bdf2);
    const TrainedBases b = train_bases(trajs, plan, 0.999, 0.99);
    const Parameters test{3.4, 0.0165};
    const BurgersModel model(wst::testing::small_grid(), test);
    const RomSolution sol = solve_wst_lspg(model, b.windows, plan, Vector::Ones(50), nullptr, {});
    const WindowSolveReport ref =
        solve_st_lspg_dense(model, b.windows[0].dense(), Vector::Ones(50), 0.1, 16, bdf2, Vector::Zero(b.total_cols()), {});
    ASSERT_EQ(sol.reports[0].iterates.size(), ref.iterates.size());
    EXPECT_LE((sol.coords[0] - ref.iterates.back()).norm(), 1e-12 * std::max(1.0, sol.coords[0].norm()));
}
