// Copyright 2026 The wst-lspg Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "wst/hyper.hpp"
#include "wst/metrics.hpp"

using namespace wst;
using wst::testing::orth_error;
using wst::testing::random_matrix;
using wst::testing::random_vector;

namespace
{

// Tensor-product residual basis with p spatial modes and q temporal modes
// per spatial mode, all random orthonormal.
ResidualBasis random_residual_basis(Index ns, Index nt, Index p, Index q, unsigned seed)
{
    ResidualBasis rb;
    rb.n_space = ns;
    rb.sub_steps = {nt};
    rb.spatial = {thin_qr(random_matrix(ns, p, seed)).Q};
    std::vector<Matrix> psi;
    for (Index i = 0; i < p; ++i)
        psi.push_back(thin_qr(random_matrix(nt, q, seed * 31 + 7 + static_cast<unsigned>(i))).Q);
    rb.temporal = {psi};
    rb.blocks = {thin_qr(assemble_subwindow_basis(rb.spatial[0], psi).assembled).Q};
    return rb;
}

Index max_temporal(const ResidualBasis& rb)
{
    Index n = 0;
    for (const auto& sub : rb.temporal)
        for (const Matrix& p : sub)
            n = std::max(n, p.cols());
    return n;
}

Matrix sampled_basis(const ResidualBasis& rb, const SampleMesh& mesh)
{
    Matrix zp(mesh.size(), rb.cols());
    Index i = 0;
    for (Index t : mesh.temporal)
        for (Index s : mesh.spatial)
            zp.row(i++) = rb.row(t, s);
    return zp;
}

double gappy_error(const ResidualBasis& rb, const SampleMesh& mesh, const Matrix& data)
{
    const GnatWeights w = gnat_weights(mesh, rb);
    const Matrix pi = rb.dense();
    return (data - pi * w.apply(data)).norm() / data.norm();
}

// Trained state bases, residual snapshots and the pieces of a GNAT model on
// the reduced Burgers problem.
struct GnatStudy
{
    SpatialGrid grid = wst::testing::small_grid();
    std::vector<Parameters> params = wst::testing::small_params(3, 2);
    Parameters test{3.4, 0.0165};
    WindowPlan plan;
    TrainedBases bases;
    InitialGuessModel guess;
    std::vector<ResidualSnapshots> snaps;
    GaussNewtonConfig cfg;

    GnatStudy(Index n_steps, double l_w, double l_s, bool include_test, double tol = 1e-6)
    {
        plan = WindowPlan::uniform(n_steps, 0.1, l_w, l_s);
        const std::vector<Trajectory> trajs = wst::testing::small_trajectories(params, n_steps);
        bases = train_bases(trajs, plan, 0.99, 0.99);
        guess = fit_initial_guess(bases, trajs, params);
        cfg.tol = tol;
        std::vector<Parameters> rparams = params;
        if (include_test)
            rparams.push_back(test);
        GaussNewtonConfig rc = cfg;
        rc.record_residuals = true;
        snaps = collect_residual_snapshots(static_cast<Index>(rparams.size()), plan, grid.n_cells, [&](Index q) {
            const BurgersModel m(grid, rparams[static_cast<std::size_t>(q)]);
            return solve_wst_lspg(m, bases.windows, plan, Vector::Ones(grid.n_cells),
                                  regression_guess(guess, rparams[static_cast<std::size_t>(q)]), rc);
        });
    }
};

}  // namespace

TEST(ResidualSnapshotsTest, NresBookkeeping)
{
    const WindowPlan plan(4, 0.1, {{2}, {2}});
    const std::vector<int> n_gn{2, 3, 4};
    const auto snaps = collect_residual_snapshots(3, plan, 3, [&](Index q) {
        RomSolution sol;
        for (Index k = 0; k < 2; ++k)
        {
            WindowSolveReport rep;
            rep.window = k;
            rep.iterations = k == 0 ? n_gn[static_cast<std::size_t>(q)] : 1;
            rep.residual_snapshots = Matrix::Constant(6, rep.iterations, static_cast<double>(q + 1));
            sol.reports.push_back(rep);
        }
        return sol;
    });
    ASSERT_EQ(snaps.size(), 2u);
    EXPECT_EQ(snaps[0].n_res(), 9);
    EXPECT_EQ(snaps[0].n_gn, n_gn);
    EXPECT_EQ(snaps[1].n_res(), 3);  // one iteration per parameter, one column each
    EXPECT_EQ(snaps[0].columns(0, 2), 2.0);
    EXPECT_EQ(snaps[0].columns(0, 8), 3.0);

    EXPECT_THROW(collect_residual_snapshots(0, plan, 3, nullptr), Error);
    try
    {
        collect_residual_snapshots(2, plan, 3, [](Index q) -> RomSolution {
            if (q == 1)
                throw DivergenceError(1, RomSolution{});
            return {};
        });
        FAIL();
    }
    catch (const Error& e)
    {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("parameter 1"), std::string::npos) << msg;
        EXPECT_NE(msg.find("window 1"), std::string::npos) << msg;
    }
}

TEST(ResidualSnapshotsTest, LastColumnMatchesFinalResidual)
{
    GnatStudy s(16, 0.8, 0.4, false);
    const BurgersModel m(s.grid, s.params[0]);
    GaussNewtonConfig rc;
    rc.record_residuals = true;
    const RomSolution sol =
        solve_wst_lspg(m, s.bases.windows, s.plan, Vector::Ones(50), regression_guess(s.guess, s.params[0]), rc);
    for (const WindowSolveReport& rep : sol.reports)
    {
        ASSERT_EQ(rep.residual_snapshots.cols(), rep.iterations);
        EXPECT_NEAR(rep.residual_snapshots.col(rep.iterations - 1).norm(), rep.final_residual_norm,
                    1e-12 * std::max(1.0, rep.final_residual_norm));
    }
}

TEST(ResidualBasisTest, RankOneData)
{
    ResidualSnapshots snaps;
    snaps.n_space = 4;
    snaps.n_steps = 3;
    const Matrix field = random_vector(4, 3) * random_vector(3, 4).transpose();
    const Vector v = Eigen::Map<const Vector>(field.data(), 12);
    snaps.columns = v * Eigen::RowVector3d(1.0, -2.0, 0.5);
    const ResidualBasis rb = build_residual_basis(snaps, 0.999, 0.999);
    ASSERT_EQ(rb.cols(), 1);
    EXPECT_NEAR(rb.blocks[0].col(0).norm(), 1.0, 1e-14);
    EXPECT_NEAR(std::abs(rb.blocks[0].col(0).dot(v.normalized())), 1.0, 1e-12);
}

TEST(ResidualBasisTest, FullEnergySpansSnapshotsAndIsOrthonormal)
{
    for (Index n_sub_r : {1, 2, 4})
    {
        ResidualSnapshots snaps;
        snaps.n_space = 6;
        snaps.n_steps = 8;
        snaps.columns = random_matrix(6, 4, 5).replicate(8, 1) * random_matrix(4, 7, 6) +
                        1e-3 * random_matrix(48, 7, 7);
        const ResidualBasis rb = build_residual_basis(snaps, 1.0, 1.0, n_sub_r);
        const Matrix pi = rb.dense();
        EXPECT_LT(orth_error(pi), 1e-10);
        EXPECT_LT((snaps.columns - pi * (pi.transpose() * snaps.columns)).norm(), 1e-8 * snaps.columns.norm());
        // block diagonal over residual sub-windows
        ASSERT_EQ(static_cast<Index>(rb.blocks.size()), n_sub_r);
        for (Index m = 0; m < n_sub_r; ++m)
        {
            const Index r0 = rb.step_offset(m) * 6;
            const Index c0 = rb.col_offset(m);
            const Index nr = rb.blocks[static_cast<std::size_t>(m)].rows();
            const Index nc = rb.blocks[static_cast<std::size_t>(m)].cols();
            EXPECT_NEAR(pi.block(r0, c0, nr, nc).norm(), std::sqrt(static_cast<double>(nc)), 1e-10);
        }
    }
}

TEST(ResidualBasisTest, Errors)
{
    ResidualSnapshots snaps;
    snaps.n_space = 2;
    snaps.n_steps = 3;
    snaps.columns = Matrix::Zero(6, 2);
    EXPECT_THROW(build_residual_basis(snaps, 0.9, 0.9), Error);
    snaps.columns = random_matrix(6, 2, 1);
    EXPECT_THROW(build_residual_basis(snaps, 0.9, 0.9, 2), Error);
}

TEST(SampleMeshTest, FullMeshSelectsEverything)
{
    const ResidualBasis rb = random_residual_basis(5, 4, 3, 1, 11);
    const SampleMesh mesh = greedy_sample_mesh(rb, 4, 5);
    EXPECT_EQ(mesh.temporal, (std::vector<Index>{0, 1, 2, 3}));
    EXPECT_EQ(mesh.spatial, (std::vector<Index>{0, 1, 2, 3, 4}));
    EXPECT_EQ(mesh.size(), 20);
    const std::vector<Index> rows = mesh.rows(5);
    for (Index i = 0; i < 20; ++i)
        EXPECT_EQ(rows[static_cast<std::size_t>(i)], i);
}

TEST(SampleMeshTest, CanonicalBasisVectorsAreFoundFirst)
{
    // residual basis = e_(t=2, s=3) and e_(t=5, s=1) on a 6-cell, 8-step window
    const Index ns = 6;
    const Index nt = 8;
    ResidualBasis rb;
    rb.n_space = ns;
    rb.sub_steps = {nt};
    Matrix phi = Matrix::Zero(ns, 2);
    phi(3, 0) = 1.0;
    phi(1, 1) = 1.0;
    rb.spatial = {phi};
    rb.temporal = {{Matrix(Vector::Unit(nt, 2)), Matrix(Vector::Unit(nt, 5))}};
    rb.blocks = {assemble_subwindow_basis(phi, rb.temporal[0]).assembled};

    const SampleMesh m = greedy_sample_mesh(rb, 2, 2);
    EXPECT_EQ(m.temporal, (std::vector<Index>{2, 5}));
    EXPECT_EQ(m.spatial, (std::vector<Index>{1, 3}));
    const std::vector<Index> rows = m.rows(ns);
    for (Index want : {2 * ns + 3, 5 * ns + 1})
        EXPECT_NE(std::find(rows.begin(), rows.end(), want), rows.end()) << want;
    const GnatWeights w = gnat_weights(m, rb);
    EXPECT_LT((w.apply(rb.dense()) - Matrix::Identity(2, 2)).norm(), 1e-12);
}

TEST(SampleMeshTest, RandomBasesGiveFullRank)
{
    for (unsigned seed = 0; seed < 25; ++seed)
    {
        const Index ns = 12 + seed % 5;
        const Index nt = 6 + seed % 3;
        const ResidualBasis rb = random_residual_basis(ns, nt, 2 + seed % 3, 1 + seed % 3, 100 + seed);
        const Index nr = rb.cols();
        const Index zt = std::min<Index>(nt, max_temporal(rb) + seed % 2);
        const Index zs = std::min<Index>(ns, (2 * nr + zt - 1) / zt);
        const SampleMesh mesh = greedy_sample_mesh(rb, zt, zs);
        ASSERT_GE(mesh.size(), 2 * nr) << seed;
        EXPECT_TRUE(std::is_sorted(mesh.temporal.begin(), mesh.temporal.end()));
        EXPECT_TRUE(std::is_sorted(mesh.spatial.begin(), mesh.spatial.end()));
        EXPECT_EQ(std::adjacent_find(mesh.spatial.begin(), mesh.spatial.end()), mesh.spatial.end());
        const Vector sv = thin_svd(sampled_basis(rb, mesh)).singular_values;
        EXPECT_GT(sv(sv.size() - 1), 1e-10) << seed;
    }
}

TEST(SampleMeshTest, InfeasibleCounts)
{
    const ResidualBasis rb = random_residual_basis(5, 4, 3, 1, 1);
    EXPECT_THROW(greedy_sample_mesh(rb, 0, 3), Error);
    EXPECT_THROW(greedy_sample_mesh(rb, 5, 3), Error);
    EXPECT_THROW(greedy_sample_mesh(rb, 2, 6), Error);
    EXPECT_THROW(greedy_sample_mesh(rb, 1, 1), Error);  // z below n_st,r
}

TEST(GnatWeightsTest, FullMeshIsTranspose)
{
    const ResidualBasis rb = random_residual_basis(5, 4, 3, 1, 2);
    const SampleMesh full = greedy_sample_mesh(rb, 4, 5);
    const GnatWeights w = gnat_weights(full, rb);
    const Matrix pi = rb.dense();
    const Vector v = random_vector(20, 3);
    EXPECT_LT((w.apply(v) - pi.transpose() * v).norm(), 1e-12);
    EXPECT_LT((w.apply(pi) - Matrix::Identity(pi.cols(), pi.cols())).norm(), 1e-12);
}

TEST(GnatWeightsTest, InSpanExactnessAndSampledZeros)
{
    for (unsigned seed = 0; seed < 20; ++seed)
    {
        const ResidualBasis rb = random_residual_basis(10, 6, 2 + seed % 3, 1 + seed % 3, 40 + seed);
        const Index nr = rb.cols();
        const SampleMesh mesh = greedy_sample_mesh(rb, 3, std::min<Index>(10, (nr + 2) / 3 + 1));
        const GnatWeights w = gnat_weights(mesh, rb);
        const Matrix pi = rb.dense();
        EXPECT_LT((w.apply(pi) - Matrix::Identity(nr, nr)).norm(), 1e-8) << seed;
        const Vector v = pi * random_vector(nr, 90 + seed);
        EXPECT_LT((pi * w.apply(v) - v).norm(), 1e-8 * v.norm()) << seed;
        // a vector that vanishes on the sample mesh is invisible to W
        Vector u = random_vector(60, 70 + seed);
        for (Index r : w.rows)
            u(r) = 0.0;
        EXPECT_EQ(w.apply(u), Vector::Zero(nr));
    }
}

TEST(GnatWeightsTest, RankDeficientSamplesAreRejected)
{
    // both basis vectors live at time 3 only; sampling time 0 sees nothing
    ResidualBasis rb;
    rb.n_space = 3;
    rb.sub_steps = {4};
    rb.spatial = {Matrix::Identity(3, 2)};
    rb.temporal = {{Matrix(Vector::Unit(4, 3)), Matrix(Vector::Unit(4, 3))}};
    rb.blocks = {assemble_subwindow_basis(rb.spatial[0], rb.temporal[0]).assembled};
    SampleMesh mesh;
    mesh.temporal = {0};
    mesh.spatial = {0, 1, 2};
    EXPECT_THROW(gnat_weights(mesh, rb), Error);
    mesh.spatial = {0};
    EXPECT_THROW(gnat_weights(mesh, rb), Error);
}

TEST(GnatEvaluatorTest, SampledRowsMatchWeightedFullEvaluation)
{
    for (const LmmScheme& scheme : {LmmScheme::bdf1(), LmmScheme::bdf2()})
    {
        const SpatialGrid grid = wst::testing::small_grid();
        const std::vector<Parameters> params = wst::testing::small_params(3, 2);
        const std::vector<Trajectory> trajs = wst::testing::small_trajectories(params, 16, scheme);
        const WindowPlan plan = WindowPlan::uniform(16, 0.1, 0.8, 0.4, scheme);
        const TrainedBases b = train_bases(trajs, plan, 0.99, 0.99);
        const BurgersModel model(grid, {3.4, 0.0165});
        for (Index k = 0; k < plan.n_windows(); ++k)
        {
            const ResidualBasis rb = random_residual_basis(50, plan.window_steps(k), 4, 2, 300 + static_cast<unsigned>(k));
            const SampleMesh mesh = greedy_sample_mesh(rb, 3, 7);
            const GnatWeights w = gnat_weights(mesh, rb);
            const WindowBasis& wb = b.windows[static_cast<std::size_t>(k)];
            const GnatWindowData<BurgersModel> data(model, plan, k, wb, mesh, w);
            const Vector in = trajs[1].state(plan.phi(k) - 1);
            GnatWindowEvaluator<BurgersModel> fast(model, data, in);
            FullWindowEvaluator<BurgersModel, WindowBasis> full(model, plan, k, wb, in, &w);
            const Vector y = 0.1 * random_vector(wb.cols(), 17 + static_cast<unsigned>(k));
            Vector r1;
            Vector r2;
            Matrix j1;
            Matrix j2;
            fast.evaluate(y, r1, &j1);
            full.evaluate(y, r2, &j2);
            EXPECT_LT((r1 - r2).norm(), 1e-12 * std::max(1.0, r2.norm())) << scheme.str() << " window " << k;
            EXPECT_LT((j1 - j2).norm(), 1e-12 * std::max(1.0, j2.norm())) << scheme.str() << " window " << k;
            // only the sampled entries' stencils are reconstructed
            EXPECT_LT(data.n_entries(), 50 * plan.window_steps(k));
        }
    }
}

TEST(GnatSolveTest, FullMeshFullEnergyMatchesLspg)
{
    GnatStudy s(32, 0.8, 0.4, true, 1e-10);
    const BurgersModel model(s.grid, s.test);
    std::vector<GnatWindowData<BurgersModel>> data;
    for (Index k = 0; k < s.plan.n_windows(); ++k)
    {
        const ResidualBasis rb = build_residual_basis(s.snaps[static_cast<std::size_t>(k)], 1.0, 1.0);
        const SampleMesh mesh = greedy_sample_mesh(rb, s.plan.window_steps(k), 50);
        data.emplace_back(model, s.plan, k, s.bases.windows[static_cast<std::size_t>(k)], mesh,
                          gnat_weights(mesh, rb));
    }
    const GuessFn guess = regression_guess(s.guess, s.test);
    const RomSolution lspg = solve_wst_lspg(model, s.bases.windows, s.plan, Vector::Ones(50), guess, s.cfg);
    const RomSolution gnat = solve_wst_gnat(model, s.bases.windows, data, s.plan, Vector::Ones(50), guess, s.cfg);
    ASSERT_TRUE(gnat.converged);
    for (std::size_t k = 0; k < lspg.coords.size(); ++k)
        EXPECT_LT((gnat.coords[k] - lspg.coords[k]).norm(), 1e-8 * std::max(1.0, lspg.coords[k].norm())) << k;
}

TEST(GnatSolveTest, FullMeshWeightsGiveProjectedObjectiveIterates)
{
    // With Z = I the weighting is Pi_r^T up to round-off; both weightings
    // must produce the same Gauss-Newton iterates.
    GnatStudy s(16, 0.8, 0.8, false);
    const BurgersModel model(s.grid, s.test);
    std::vector<GnatWeights> gappy;
    std::vector<GnatWeights> projected;
    for (Index k = 0; k < s.plan.n_windows(); ++k)
    {
        const ResidualBasis rb = build_residual_basis(s.snaps[static_cast<std::size_t>(k)], 0.999, 0.999);
        const SampleMesh mesh = greedy_sample_mesh(rb, s.plan.window_steps(k), 50);
        gappy.push_back(gnat_weights(mesh, rb));
        GnatWeights p;
        p.rows = mesh.rows(50);
        p.op = rb.dense().transpose();
        projected.push_back(p);
    }
    const GuessFn guess = regression_guess(s.guess, s.test);
    const RomSolution a = solve_wst_lspg(model, s.bases.windows, s.plan, Vector::Ones(50), guess, s.cfg, &gappy);
    const RomSolution b = solve_wst_lspg(model, s.bases.windows, s.plan, Vector::Ones(50), guess, s.cfg, &projected);
    for (std::size_t k = 0; k < a.reports.size(); ++k)
    {
        ASSERT_EQ(a.reports[k].iterates.size(), b.reports[k].iterates.size());
        for (std::size_t i = 0; i < a.reports[k].iterates.size(); ++i)
            EXPECT_LT((a.reports[k].iterates[i] - b.reports[k].iterates[i]).norm(),
                      1e-12 * std::max(1.0, b.reports[k].iterates[i].norm()));
    }
}

TEST(GnatSolveTest, SampledSolveConvergesWithSmallMesh)
{
    GnatStudy s(32, 0.8, 0.4, false);
    const BurgersModel model(s.grid, s.test);
    std::vector<GnatWindowData<BurgersModel>> data;
    for (Index k = 0; k < s.plan.n_windows(); ++k)
    {
        const ResidualBasis rb = build_residual_basis(s.snaps[static_cast<std::size_t>(k)], 0.999, 0.999);
        const Index zt = std::min(s.plan.window_steps(k), max_temporal(rb) + 1);
        const SampleMesh mesh = greedy_sample_mesh(rb, zt, 30);
        data.emplace_back(model, s.plan, k, s.bases.windows[static_cast<std::size_t>(k)], mesh,
                          gnat_weights(mesh, rb));
    }
    const GuessFn guess = regression_guess(s.guess, s.test);
    const RomSolution gnat = solve_wst_gnat(model, s.bases.windows, data, s.plan, Vector::Ones(50), guess, s.cfg);
    const RomSolution lspg = solve_wst_lspg(model, s.bases.windows, s.plan, Vector::Ones(50), guess, s.cfg);
    const Trajectory fom = fom_march(s.test, s.grid, 0.1, 32);
    EXPECT_TRUE(gnat.converged);
    EXPECT_LE(mse(gnat.trajectory, fom), 5.0 * mse(lspg.trajectory, fom) + 1e-3);
}

TEST(SampleMeshTest, EnlargingTheMeshNestsAndReducesAmplification)
{
    // Growing z_s (or z_t) extends the greedy sequence, so meshes are nested.
    // Adding rows can only grow Z Pi_r's Gram matrix, so the gappy
    // amplification ||(Z Pi_r)^+||_F never increases. The error on training
    // data never drops below the orthogonal projection error, which the full
    // mesh attains.
    GnatStudy s(32, 1.6, 1.6, false);
    for (Index k = 0; k < s.plan.n_windows(); ++k)
    {
        const ResidualSnapshots& snaps = s.snaps[static_cast<std::size_t>(k)];
        const ResidualBasis rb = build_residual_basis(snaps, 0.999, 0.999);
        const Matrix pi = rb.dense();
        const double floor = (snaps.columns - pi * (pi.transpose() * snaps.columns)).norm() / snaps.columns.norm();
        const Index nt = s.plan.window_steps(k);
        const Index zt = max_temporal(rb) + 1;
        Index z0 = (rb.cols() + zt - 1) / zt;
        while (z0 < 50)
        {
            try
            {
                greedy_sample_mesh(rb, zt, z0);
                break;
            }
            catch (const Error&)
            {
                ++z0;
            }
        }
        SampleMesh prev_mesh;
        double prev_amp = std::numeric_limits<double>::infinity();
        for (Index zs = z0; zs <= 50; zs += 3)
        {
            const SampleMesh mesh = greedy_sample_mesh(rb, zt, zs);
            const double amp = gnat_weights(mesh, rb).op.norm();
            EXPECT_LE(amp, prev_amp * (1.0 + 1e-10)) << "window " << k << " z_s " << zs;
            EXPECT_GE(gappy_error(rb, mesh, snaps.columns), floor * (1.0 - 1e-10));
            for (Index c : prev_mesh.spatial)
                EXPECT_TRUE(std::binary_search(mesh.spatial.begin(), mesh.spatial.end(), c));
            EXPECT_EQ(mesh.temporal, greedy_sample_mesh(rb, zt, z0).temporal);
            prev_amp = amp;
            prev_mesh = mesh;
        }
        EXPECT_NEAR(gappy_error(rb, greedy_sample_mesh(rb, nt, 50), snaps.columns), floor, 1e-10);
        SampleMesh prev_t;
        for (Index zt2 = zt; zt2 <= nt; ++zt2)
        {
            const SampleMesh mesh = greedy_sample_mesh(rb, zt2, 40);
            for (Index t : prev_t.temporal)
                EXPECT_TRUE(std::binary_search(mesh.temporal.begin(), mesh.temporal.end(), t));
            prev_t = mesh;
        }
    }
}
