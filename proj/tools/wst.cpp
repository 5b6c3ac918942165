// Copyright 2026 The wst-lspg Authors.
// SPDX-License-Identifier: Apache-2.0

// Command-line driver. Single-configuration commands (solve, gnat-train,
// bounds) use the first entry of every list-valued config key; sweep uses
// all of them.

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "wst/wst.hpp"

namespace fs = std::filesystem;
using namespace wst;

namespace
{

struct Selection
{
    WindowPlan plan;
    double e_s = 0.0;
    double e_t = 0.0;
    double e_rs = 0.0;
    double e_rt = 0.0;
    Index z_t = 0;
    Index z_s = 0;
};

Selection first_selection(const Config& c)
{
    Selection s;
    s.plan = WindowPlan::uniform(c.n_steps, c.dt, c.l_w.front(), c.l_s.front(), c.scheme);
    s.e_s = c.e_s.front();
    s.e_t = c.e_t.front();
    s.e_rs = c.e_rs.front();
    s.e_rt = c.e_rt.front();
    s.z_t = c.z_t.front();
    s.z_s = c.z_s.front();
    return s;
}

void note(const std::string& s) { std::cerr << "[wst] " << s << std::endl; }

std::string tag(double l_w, double l_s, double e_s, double e_t)
{
    std::ostringstream o;
    o << "lw" << l_w << "_ls" << l_s << "_es" << e_s << "_et" << e_t;
    return o.str();
}

LspgArtifacts train_first(const Config& c, const Selection& s, std::vector<Trajectory>* trajs_out = nullptr)
{
    const std::vector<Parameters> params = c.training();
    note("running " + std::to_string(params.size()) + " training FOMs");
    std::vector<Trajectory> trajs = burgers_foms(params, c.grid(), s.plan);
    note("training bases (l_w=" + std::to_string(s.plan.l_w()) + ", l_s=" + std::to_string(s.plan.l_s()) + ")");
    LspgArtifacts a = train_lspg(trajs, params, s.plan, s.e_s, s.e_t);
    note("n_st = " + std::to_string(a.bases.total_cols()));
    if (trajs_out)
        *trajs_out = std::move(trajs);
    return a;
}

GnatArtifacts gnat_first(const Config& c, const Selection& s, const LspgArtifacts& a)
{
    const auto rparams = c.residual_training();
    note("collecting residual snapshots at " + std::to_string(rparams.size()) + " parameters");
    const auto snaps = burgers_residual_snapshots(c.grid(), rparams, a, c.solver);
    GnatArtifacts g = build_gnat(c.grid(), a, build_residual_bases(snaps, s.e_rs, s.e_rt, c.n_sub_r), s.z_t, s.z_s);
    g.e_rs = s.e_rs;
    g.e_rt = s.e_rt;
    note("n_st,r = " + std::to_string(g.total_residual_cols()));
    return g;
}

int cmd_fom(const std::string& config, double mu1, double mu2, const std::string& out, const std::string& csv)
{
    const Config c = config.empty() ? Config{} : load_config(config);
    const WindowPlan plan = WindowPlan::uniform(c.n_steps, c.dt, c.l_w.front(), c.l_s.front(), c.scheme);
    const Trajectory t = burgers_fom({mu1, mu2}, c.grid(), plan);
    io::write_trajectory(out, t);
    if (!csv.empty())
        io::write_trajectory_csv(csv, t, c.grid());
    return 0;
}

int cmd_train(const std::string& config, const std::string& out_dir)
{
    const Config c = load_config(config);
    const std::vector<Parameters> params = c.training();
    fs::create_directories(fs::path(out_dir) / "trajectories");
    std::map<std::vector<Index>, std::vector<Trajectory>> cache;
    for (double l_w : c.l_w)
        for (double l_s : c.l_s)
        {
            if (l_s > l_w)
                continue;
            const WindowPlan plan = WindowPlan::uniform(c.n_steps, c.dt, l_w, l_s, c.scheme);
            const auto key = fom_restarts(plan);
            if (!cache.count(key))
            {
                note("running " + std::to_string(params.size()) + " training FOMs");
                cache[key] = burgers_foms(params, c.grid(), plan);
                if (key.empty())
                    for (std::size_t i = 0; i < params.size(); ++i)
                        io::write_trajectory(
                            (fs::path(out_dir) / "trajectories" / ("train_" + std::to_string(i) + ".wstr")).string(),
                            cache[key][i]);
            }
            for (double e_s : c.e_s)
                for (double e_t : c.e_t)
                {
                    const LspgArtifacts a = train_lspg(cache[key], params, plan, e_s, e_t);
                    const std::string dir = (fs::path(out_dir) / "bases" / tag(l_w, l_s, e_s, e_t)).string();
                    io::write_basis_bundle(dir, a.bases, &a.guess);
                    note(dir + ": n_st = " + std::to_string(a.bases.total_cols()));
                }
        }
    return 0;
}

int cmd_solve(const std::string& config, double mu1, double mu2, bool gnat, const std::string& out,
              const std::string& traj_out, const std::string& log_out)
{
    const Config c = load_config(config);
    const Selection s = first_selection(c);
    const LspgArtifacts a = train_first(c, s);
    GnatArtifacts g;
    if (gnat)
        g = gnat_first(c, s, a);
    const Parameters p{mu1, mu2};
    if (!p.in_training_domain())
        note("warning: test parameter lies outside the training box");

    std::vector<double> fom_times;
    std::vector<double> rom_times;
    Trajectory fom;
    RomSolution sol;
    for (int r = 0; r < c.repetitions; ++r)
    {
        const auto t0 = std::chrono::steady_clock::now();
        fom = burgers_fom(p, c.grid(), s.plan);
        fom_times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        sol = gnat ? solve_gnat(c.grid(), p, a, g, c.solver) : solve_lspg(c.grid(), p, a, c.solver);
        rom_times.push_back(sol.seconds);
    }
    ErrorReport e;
    e.mse = mse(sol.trajectory, fom);
    e.imse = imse(sol.trajectory, fom, c.dt);
    e.residual_l2 = residual_l2(sol.trajectory, p, s.plan, c.grid());
    e.wall_time_rom = median(rom_times);
    e.wall_time_fom = median(fom_times);
    e.relative_wall_time = e.wall_time_rom / e.wall_time_fom;
    nlohmann::json extra = {{"method", method_label(s.plan, gnat)},
                            {"mu1", mu1},
                            {"mu2", mu2},
                            {"l_w", s.plan.l_w()},
                            {"l_s", s.plan.l_s()},
                            {"e_s", s.e_s},
                            {"e_t", s.e_t},
                            {"n_st", a.bases.total_cols()},
                            {"converged", sol.converged}};
    if (gnat)
        extra.update({{"e_rs", s.e_rs},
                      {"e_rt", s.e_rt},
                      {"z_t", s.z_t},
                      {"z_s", s.z_s},
                      {"n_st_r", g.total_residual_cols()}});
    io::append_error_report(out, e, extra);
    if (!traj_out.empty())
        io::write_trajectory(traj_out, sol.trajectory);
    if (!log_out.empty())
        io::write_convergence_csv(log_out, sol.reports);
    std::cout << io::to_json(e).dump() << std::endl;
    return sol.converged ? 0 : 3;
}

int cmd_gnat_train(const std::string& config, const std::string& out_dir)
{
    const Config c = load_config(config);
    const Selection s = first_selection(c);
    const LspgArtifacts a = train_first(c, s);
    const GnatArtifacts g = gnat_first(c, s, a);
    fs::create_directories(out_dir);
    io::write_basis_bundle((fs::path(out_dir) / "state").string(), a.bases, &a.guess);
    io::write_residual_bundle((fs::path(out_dir) / "residual").string(), s.plan, g.residual, s.e_rs, s.e_rt);
    io::write_meshes((fs::path(out_dir) / "mesh.txt").string(), g.meshes);
    for (std::size_t k = 0; k < g.data.size(); ++k)
        io::write_matrix((fs::path(out_dir) / ("weights_" + std::to_string(k) + ".wstr")).string(),
                         g.data[k].weights().op);
    return 0;
}

int cmd_sweep(const std::string& config, const std::string& out, const std::string& pareto_out,
              const std::string& column)
{
    const Config c = load_config(config);
    const auto rows = pareto_sweep(SweepConfig::from(c), SweepProblem::from(c), note);
    write_sweep_csv(out, rows);
    if (!pareto_out.empty())
        write_sweep_csv(pareto_out, pareto_front(rows, column));
    Index failed = 0;
    for (const SweepRow& r : rows)
        failed += r.converged ? 0 : 1;
    note(std::to_string(rows.size()) + " rows, " + std::to_string(failed) + " failed");
    return 0;
}

int cmd_bounds(const std::string& config, double mu1, double mu2, const std::string& out)
{
    const Config c = load_config(config);
    const Selection s = first_selection(c);
    std::vector<Trajectory> trajs;
    const LspgArtifacts a = train_first(c, s, &trajs);
    const Parameters p{mu1, mu2};
    const BurgersModel model(c.grid(), p);
    std::vector<Vector> states;
    for (const Trajectory& t : trajs)
        for (Index n = 0; n <= t.n_time(); n += std::max<Index>(1, t.n_time() / 16))
            states.push_back(t.state(n));
    const double kappa = estimate_lipschitz(model, states);
    note("kappa_f (lower estimate) = " + std::to_string(kappa));
    const Trajectory fom = burgers_fom(p, c.grid(), s.plan);
    GaussNewtonConfig cfg = c.solver;
    cfg.abort_on_divergence = false;
    const RomSolution sol = solve_lspg(c.grid(), p, a, cfg);
    const BoundReport post = aposteriori_bound(model, sol.trajectory, fom, s.plan, kappa);
    const BoundReport prior = apriori_bound(model, fom, a.bases.windows, s.plan, kappa, &sol.trajectory);
    io::write_bounds_csv(out, {post, prior});
    note(std::to_string(post.applicable()) + " of " + std::to_string(post.windows.size()) +
         " windows satisfy A2; a posteriori violations: " + std::to_string(post.violations()));
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Windowed space-time LSPG model reduction for the 1D Burgers benchmark"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    std::string out_dir;
    double mu1 = 0.0;
    double mu2 = 0.0;

    auto* fom = app.add_subcommand("fom", "Run the full-order model and write its trajectory");
    std::string csv;
    fom->add_option("--config", config, "Config file (defaults to the benchmark setup)")->check(CLI::ExistingFile);
    fom->add_option("--mu1", mu1, "Inflow state")->required();
    fom->add_option("--mu2", mu2, "Source decay rate")->required();
    fom->add_option("--out", out, "Output .wstr trajectory")->required();
    fom->add_option("--csv", csv, "Also write a t,x,u CSV");

    auto* train = app.add_subcommand("train", "Build training trajectories and state basis bundles");
    train->add_option("--config", config)->required()->check(CLI::ExistingFile);
    train->add_option("--out-dir", out_dir)->required();

    auto* solve = app.add_subcommand("solve", "Online solve at one parameter; appends a JSON-lines error report");
    bool gnat = false;
    std::string traj_out;
    std::string log_out;
    solve->add_option("--config", config)->required()->check(CLI::ExistingFile);
    solve->add_option("--mu1", mu1)->required();
    solve->add_option("--mu2", mu2)->required();
    solve->add_flag("--gnat", gnat, "Use the hyper-reduced solve");
    solve->add_option("--out", out, "JSON-lines report file")->required();
    solve->add_option("--trajectory", traj_out, "Write the ROM trajectory (.wstr)");
    solve->add_option("--log", log_out, "Write the Gauss-Newton convergence CSV");

    auto* gtrain = app.add_subcommand("gnat-train", "Residual bases, sample meshes and weights");
    gtrain->add_option("--config", config)->required()->check(CLI::ExistingFile);
    gtrain->add_option("--out-dir", out_dir)->required();

    auto* sweep = app.add_subcommand("sweep", "Pareto study over every configured combination");
    std::string pareto_out;
    std::string column = "mse";
    sweep->add_option("--config", config)->required()->check(CLI::ExistingFile);
    sweep->add_option("--out", out, "CSV of all rows")->required();
    sweep->add_option("--pareto", pareto_out, "CSV of the Pareto-optimal rows");
    sweep->add_option("--error", column, "Error column for the front")
        ->check(CLI::IsMember({"mse", "imse", "residual_l2"}));

    auto* bounds = app.add_subcommand("bounds", "A posteriori and a priori error bounds per window");
    bounds->add_option("--config", config)->required()->check(CLI::ExistingFile);
    bounds->add_option("--mu1", mu1)->required();
    bounds->add_option("--mu2", mu2)->required();
    bounds->add_option("--out", out, "CSV output")->required();

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*fom)
            return cmd_fom(config, mu1, mu2, out, csv);
        if (*train)
            return cmd_train(config, out_dir);
        if (*solve)
            return cmd_solve(config, mu1, mu2, gnat, out, traj_out, log_out);
        if (*gtrain)
            return cmd_gnat_train(config, out_dir);
        if (*sweep)
            return cmd_sweep(config, out, pareto_out, column);
        if (*bounds)
            return cmd_bounds(config, mu1, mu2, out);
    }
    catch (const std::exception& e)
    {
        std::cerr << "wst: error: " << e.what() << std::endl;
        return 2;
    }
    return 1;
}
