// Copyright 2026 The wst-lspg Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WST_PIPELINE_HPP_
#define WST_PIPELINE_HPP_

// Offline/online glue for the Burgers study: training trajectories, state
// bases with their initial-guess regression, GNAT artifacts, and the two
// online solves.

#include <algorithm>
#include <chrono>
#include <string>
#include <vector>

#include "wst/burgers.hpp"
#include "wst/hyper.hpp"
#include "wst/solver.hpp"
#include "wst/subspaces.hpp"

namespace wst
{

/// Restart steps the FOM must honor to be consistent with `plan`. Only a
/// multistep scheme wider than one step cares.
inline std::vector<Index> fom_restarts(const WindowPlan& plan)
{
    return plan.scheme().width() > 1 ? plan.restart_steps() : std::vector<Index>{};
}

inline Trajectory burgers_fom(const Parameters& p, const SpatialGrid& grid, const WindowPlan& plan)
{
    return fom_march(p, grid, plan.dt(), plan.n_time(), plan.scheme(), fom_restarts(plan));
}

inline std::vector<Trajectory> burgers_foms(const std::vector<Parameters>& params, const SpatialGrid& grid,
                                            const WindowPlan& plan)
{
    std::vector<Trajectory> out;
    out.reserve(params.size());
    for (const Parameters& p : params)
        out.push_back(burgers_fom(p, grid, plan));
    return out;
}

/// State bases plus the regression that seeds every window's Gauss-Newton.
struct LspgArtifacts
{
    TrainedBases bases;
    InitialGuessModel guess;
    double seconds = 0.0;
};

inline LspgArtifacts train_lspg(const std::vector<Trajectory>& trajectories, const std::vector<Parameters>& params,
                                const WindowPlan& plan, double e_s, double e_t)
{
    const auto t0 = std::chrono::steady_clock::now();
    LspgArtifacts a;
    a.bases = train_bases(trajectories, plan, e_s, e_t);
    a.guess = fit_initial_guess(a.bases, trajectories, params);
    a.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return a;
}

inline RomSolution solve_lspg(const SpatialGrid& grid, const Parameters& p, const LspgArtifacts& a,
                              const GaussNewtonConfig& cfg)
{
    const BurgersModel model(grid, p);
    return solve_wst_lspg(model, a.bases.windows, a.bases.plan, Vector::Ones(grid.n_cells), regression_guess(a.guess, p),
                          cfg);
}

/// Residual snapshots from unweighted solves at every residual training
/// parameter.
inline std::vector<ResidualSnapshots> burgers_residual_snapshots(const SpatialGrid& grid,
                                                                 const std::vector<Parameters>& params,
                                                                 const LspgArtifacts& a, GaussNewtonConfig cfg)
{
    cfg.record_residuals = true;
    cfg.abort_on_divergence = true;
    return collect_residual_snapshots(static_cast<Index>(params.size()), a.bases.plan, grid.n_cells, [&](Index q) {
        return solve_lspg(grid, params[static_cast<std::size_t>(q)], a, cfg);
    });
}

/// Everything the sampled solve needs, per window.
struct GnatArtifacts
{
    double e_rs = 1.0;
    double e_rt = 1.0;
    Index z_t = 0;
    Index z_s = 0;
    std::vector<ResidualBasis> residual;
    std::vector<SampleMesh> meshes;
    std::vector<GnatWindowData<BurgersModel>> data;
    double seconds = 0.0;

    Index total_residual_cols() const
    {
        Index n = 0;
        for (const ResidualBasis& r : residual)
            n += r.cols();
        return n;
    }
};

/// Residual bases of every window (the first, cheaper half of the GNAT
/// offline stage; meshes depend on z_t and z_s on top of these).
inline std::vector<ResidualBasis> build_residual_bases(const std::vector<ResidualSnapshots>& snaps, double e_rs,
                                                       double e_rt, Index n_sub_r = 1)
{
    std::vector<ResidualBasis> out;
    for (const ResidualSnapshots& s : snaps)
        out.push_back(build_residual_basis(s, e_rs, e_rt, n_sub_r));
    return out;
}

/// Sample meshes and sampled-evaluation data. Stencils of the Burgers
/// residual do not depend on the parameters, so the data serves any test
/// parameter.
inline GnatArtifacts build_gnat(const SpatialGrid& grid, const LspgArtifacts& a, std::vector<ResidualBasis> residual,
                                Index z_t, Index z_s)
{
    const auto t0 = std::chrono::steady_clock::now();
    const WindowPlan& plan = a.bases.plan;
    if (static_cast<Index>(residual.size()) != plan.n_windows())
        throw Error("build_gnat: residual bases do not cover every window");
    GnatArtifacts g;
    g.z_t = z_t;
    g.z_s = z_s;
    g.residual = std::move(residual);
    const BurgersModel stencil_model(grid, Parameters{});
    for (Index k = 0; k < plan.n_windows(); ++k)
    {
        const ResidualBasis& rb = g.residual[static_cast<std::size_t>(k)];
        // Windows shorter than z_t sample every step.
        SampleMesh mesh;
        try
        {
            mesh = greedy_sample_mesh(rb, std::min(z_t, rb.n_steps()), std::min(z_s, rb.n_space));
        }
        catch (const Error& e)
        {
            throw Error(std::string(e.what()) + " (window " + std::to_string(k) + ")");
        }
        g.data.emplace_back(stencil_model, plan, k, a.bases.windows[static_cast<std::size_t>(k)], mesh,
                            gnat_weights(mesh, rb));
        g.meshes.push_back(std::move(mesh));
    }
    g.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return g;
}

inline RomSolution solve_gnat(const SpatialGrid& grid, const Parameters& p, const LspgArtifacts& a,
                              const GnatArtifacts& g, const GaussNewtonConfig& cfg)
{
    const BurgersModel model(grid, p);
    return solve_wst_gnat(model, a.bases.windows, g.data, a.bases.plan, Vector::Ones(grid.n_cells),
                          regression_guess(a.guess, p), cfg);
}

}  // namespace wst

#endif  // WST_PIPELINE_HPP_
