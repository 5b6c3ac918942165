// Copyright 2026 The wst-lspg Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WST_SWEEP_HPP_
#define WST_SWEEP_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "wst/config.hpp"
#include "wst/metrics.hpp"
#include "wst/pipeline.hpp"

namespace wst
{

struct SweepConfig
{
    std::vector<double> l_w;
    std::vector<double> l_s;
    /// Every (e_s, e_t) in the Cartesian product is trained.
    std::vector<double> e_s;
    std::vector<double> e_t;
    bool lspg = true;
    bool gnat = false;
    std::vector<double> e_rs;
    std::vector<double> e_rt;
    std::vector<Index> z_t;
    std::vector<Index> z_s;
    Index n_sub_r = 1;
    int repetitions = 5;

    static SweepConfig from(const Config& c)
    {
        SweepConfig s;
        s.l_w = c.l_w;
        s.l_s = c.l_s;
        s.e_s = c.e_s;
        s.e_t = c.e_t;
        s.lspg = c.sweep_lspg;
        s.gnat = c.sweep_gnat;
        s.e_rs = c.e_rs;
        s.e_rt = c.e_rt;
        s.z_t = c.z_t;
        s.z_s = c.z_s;
        s.n_sub_r = c.n_sub_r;
        s.repetitions = c.repetitions;
        return s;
    }
};

/// One configuration at one test parameter.
struct SweepRow
{
    std::string method;
    Parameters test;
    double l_w = 0.0;
    double l_s = 0.0;
    Index n_st = 0;
    Index n_st_r = 0;
    double e_s = 0.0;
    double e_t = 0.0;
    double e_rs = std::numeric_limits<double>::quiet_NaN();
    double e_rt = std::numeric_limits<double>::quiet_NaN();
    Index z_t = 0;
    Index z_s = 0;
    ErrorReport report{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
                       std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
                       std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    bool converged = false;
    std::string note;
    /// Kept for bound checks; not written to CSV.
    Trajectory rom;
    std::vector<WindowSolveReport> solve_reports;

    bool gnat() const { return method.find("GNAT") != std::string::npos; }
};

/// ST-* when one window and one sub-window span the whole time domain,
/// WST-* otherwise.
inline std::string method_label(const WindowPlan& plan, bool gnat)
{
    return std::string(plan.single_window() ? "ST-" : "WST-") + (gnat ? "GNAT" : "LSPG");
}

inline double median(std::vector<double> v)
{
    if (v.empty())
        throw Error("median of an empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Non-dominated rows under joint minimization of `column` and relative
/// wall time. Rows that did not converge or lack a finite value are left
/// out; equal rows are all kept.
inline std::vector<SweepRow> pareto_front(const std::vector<SweepRow>& rows, const std::string& column = "mse")
{
    auto error_of = [&](const SweepRow& r) {
        if (column == "mse")
            return r.report.mse;
        if (column == "imse")
            return r.report.imse;
        if (column == "residual_l2")
            return r.report.residual_l2;
        throw Error("pareto_front: unknown error column '" + column + "' (expected mse, imse or residual_l2)");
    };
    std::vector<const SweepRow*> ok;
    for (const SweepRow& r : rows)
        if (r.converged && std::isfinite(error_of(r)) && std::isfinite(r.report.relative_wall_time))
            ok.push_back(&r);
    std::vector<SweepRow> out;
    for (const SweepRow* a : ok)
    {
        const double ea = error_of(*a);
        const double ta = a->report.relative_wall_time;
        bool dominated = false;
        for (const SweepRow* b : ok)
        {
            const double eb = error_of(*b);
            const double tb = b->report.relative_wall_time;
            if (eb <= ea && tb <= ta && (eb < ea || tb < ta))
            {
                dominated = true;
                break;
            }
        }
        if (!dominated)
            out.push_back(*a);
    }
    return out;
}

/// Shared inputs of a sweep: problem definition, test parameters and
/// solver settings.
struct SweepProblem
{
    SpatialGrid grid;
    double dt = 0.1;
    Index n_steps = 256;
    LmmScheme scheme = LmmScheme::bdf1();
    std::vector<Parameters> training;
    /// Empty means "same as training".
    std::vector<Parameters> residual_training;
    std::vector<Parameters> test;
    GaussNewtonConfig solver;

    static SweepProblem from(const Config& c)
    {
        SweepProblem p;
        p.grid = c.grid();
        p.dt = c.dt;
        p.n_steps = c.n_steps;
        p.scheme = c.scheme;
        p.training = c.training();
        if (c.residual_mu1_count || c.residual_mu2_count)
            p.residual_training = c.residual_training();
        p.test = c.test;
        p.solver = c.solver;
        return p;
    }
};

using SweepLog = std::function<void(const std::string&)>;

/// Runs every configuration of `sc` at every test parameter. Configurations
/// run one after another so wall times are not polluted by each other.
/// Failures become rows with converged = false and a note.
inline std::vector<SweepRow> pareto_sweep(const SweepConfig& sc, const SweepProblem& prob, const SweepLog& log = {})
{
    if (prob.test.empty())
        throw Error("pareto_sweep: no test parameters");
    if (prob.training.empty())
        throw Error("pareto_sweep: no training parameters");
    if (sc.repetitions < 1)
        throw Error("pareto_sweep: repetitions must be at least 1");
    if (sc.l_w.empty() || sc.l_s.empty() || sc.e_s.empty() || sc.e_t.empty())
        throw Error("pareto_sweep: empty window or energy list");
    auto say = [&](const std::string& s) {
        if (log)
            log(s);
    };
    const std::vector<Parameters>& rtrain = prob.residual_training.empty() ? prob.training : prob.residual_training;

    // FOM trajectories per restart pattern (only BDF2 windows change them).
    std::map<std::vector<Index>, std::vector<Trajectory>> train_cache;
    std::map<std::vector<Index>, std::vector<Trajectory>> test_cache;
    std::map<std::vector<Index>, std::vector<double>> fom_time;
    auto foms_for = [&](const WindowPlan& plan) {
        const std::vector<Index> key = fom_restarts(plan);
        if (!train_cache.count(key))
        {
            say("running " + std::to_string(prob.training.size()) + " training FOMs");
            train_cache[key] = burgers_foms(prob.training, prob.grid, plan);
            std::vector<Trajectory> tests;
            std::vector<double> times;
            for (const Parameters& p : prob.test)
            {
                std::vector<double> reps;
                Trajectory t;
                for (int r = 0; r < sc.repetitions; ++r)
                {
                    const auto t0 = std::chrono::steady_clock::now();
                    t = burgers_fom(p, prob.grid, plan);
                    reps.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
                }
                tests.push_back(std::move(t));
                times.push_back(median(reps));
            }
            test_cache[key] = std::move(tests);
            fom_time[key] = std::move(times);
        }
        return key;
    };

    std::vector<SweepRow> rows;
    auto evaluate = [&](SweepRow row, const WindowPlan& plan, std::size_t ti, const std::vector<Index>& key,
                        const std::function<RomSolution()>& solve) {
        const Parameters& p = prob.test[ti];
        row.test = p;
        try
        {
            std::vector<double> reps;
            RomSolution sol;
            for (int r = 0; r < sc.repetitions; ++r)
            {
                sol = solve();
                reps.push_back(sol.seconds);
            }
            const Trajectory& fom = test_cache[key][ti];
            row.report.mse = mse(sol.trajectory, fom);
            row.report.imse = imse(sol.trajectory, fom, plan.dt());
            row.report.residual_l2 = residual_l2(sol.trajectory, p, plan, prob.grid);
            row.report.wall_time_rom = median(reps);
            row.report.wall_time_fom = fom_time[key][ti];
            row.report.relative_wall_time = row.report.wall_time_rom / row.report.wall_time_fom;
            row.converged = sol.converged;
            if (!sol.converged)
                row.note = "Gauss-Newton did not converge in every window";
            row.rom = std::move(sol.trajectory);
            row.solve_reports = std::move(sol.reports);
        }
        catch (const DivergenceError& e)
        {
            row.converged = false;
            row.note = e.what();
        }
        catch (const Error& e)
        {
            row.converged = false;
            row.note = e.what();
        }
        say(row.method + " l_w=" + std::to_string(row.l_w) + " l_s=" + std::to_string(row.l_s) +
            " mse=" + std::to_string(row.report.mse) + (row.converged ? "" : " [failed: " + row.note + "]"));
        rows.push_back(std::move(row));
    };

    for (double l_w : sc.l_w)
        for (double l_s : sc.l_s)
        {
            if (l_s > l_w)
                continue;
            WindowPlan plan;
            SweepRow base;
            base.l_w = l_w;
            base.l_s = l_s;
            try
            {
                plan = WindowPlan::uniform(prob.n_steps, prob.dt, l_w, l_s, prob.scheme);
            }
            catch (const Error& e)
            {
                base.method = "WST-LSPG";
                base.note = e.what();
                say("skipping l_w=" + std::to_string(l_w) + " l_s=" + std::to_string(l_s) + ": " + e.what());
                for (const Parameters& p : prob.test)
                {
                    base.test = p;
                    rows.push_back(base);
                }
                continue;
            }
            const auto key = foms_for(plan);
            for (double e_s : sc.e_s)
                for (double e_t : sc.e_t)
                {
                    SweepRow row = base;
                    row.e_s = e_s;
                    row.e_t = e_t;
                    LspgArtifacts art;
                    try
                    {
                        art = train_lspg(train_cache[key], prob.training, plan, e_s, e_t);
                    }
                    catch (const Error& e)
                    {
                        row.method = method_label(plan, false);
                        row.note = std::string("training failed: ") + e.what();
                        for (const Parameters& p : prob.test)
                        {
                            row.test = p;
                            rows.push_back(row);
                        }
                        continue;
                    }
                    row.n_st = art.bases.total_cols();
                    if (sc.lspg)
                    {
                        SweepRow r = row;
                        r.method = method_label(plan, false);
                        for (std::size_t ti = 0; ti < prob.test.size(); ++ti)
                            evaluate(r, plan, ti, key,
                                     [&] { return solve_lspg(prob.grid, prob.test[ti], art, prob.solver); });
                    }
                    if (!sc.gnat)
                        continue;
                    std::vector<ResidualSnapshots> snaps;
                    std::string snap_error;
                    try
                    {
                        snaps = burgers_residual_snapshots(prob.grid, rtrain, art, prob.solver);
                    }
                    catch (const Error& e)
                    {
                        snap_error = std::string("residual snapshots failed: ") + e.what();
                    }
                    for (double e_rs : sc.e_rs)
                        for (double e_rt : sc.e_rt)
                        {
                            std::vector<ResidualBasis> rbs;
                            std::string rb_error = snap_error;
                            if (rb_error.empty())
                            {
                                try
                                {
                                    rbs = build_residual_bases(snaps, e_rs, e_rt, sc.n_sub_r);
                                }
                                catch (const Error& e)
                                {
                                    rb_error = std::string("residual basis failed: ") + e.what();
                                }
                            }
                            for (Index z_t : sc.z_t)
                                for (Index z_s : sc.z_s)
                                {
                                    SweepRow r = row;
                                    r.method = method_label(plan, true);
                                    r.e_rs = e_rs;
                                    r.e_rt = e_rt;
                                    r.z_t = z_t;
                                    r.z_s = z_s;
                                    GnatArtifacts g;
                                    std::string err = rb_error;
                                    if (err.empty())
                                    {
                                        try
                                        {
                                            g = build_gnat(prob.grid, art, rbs, z_t, z_s);
                                            r.n_st_r = g.total_residual_cols();
                                        }
                                        catch (const Error& e)
                                        {
                                            err = std::string("sample mesh failed: ") + e.what();
                                        }
                                    }
                                    if (!err.empty())
                                    {
                                        r.note = err;
                                        for (const Parameters& p : prob.test)
                                        {
                                            r.test = p;
                                            rows.push_back(r);
                                        }
                                        continue;
                                    }
                                    for (std::size_t ti = 0; ti < prob.test.size(); ++ti)
                                        evaluate(r, plan, ti, key, [&] {
                                            return solve_gnat(prob.grid, prob.test[ti], art, g, prob.solver);
                                        });
                                }
                        }
                }
        }
    return rows;
}

inline void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot open '" + path + "' for writing");
    out << "method,mu1,mu2,l_w,l_s,n_st,n_st_r,e_s,e_t,e_rs,e_rt,z_t,z_s,mse,imse,residual_l2,wall_time_rom,"
           "wall_time_fom,relative_wall_time,converged,note\n"
        << std::setprecision(10);
    for (const SweepRow& r : rows)
    {
        std::string note = r.note;
        std::replace(note.begin(), note.end(), '"', '\'');
        out << r.method << ',' << r.test.mu1 << ',' << r.test.mu2 << ',' << r.l_w << ',' << r.l_s << ',' << r.n_st
            << ',' << r.n_st_r << ',' << r.e_s << ',' << r.e_t << ',' << r.e_rs << ',' << r.e_rt << ',' << r.z_t << ','
            << r.z_s << ',' << r.report.mse << ',' << r.report.imse << ',' << r.report.residual_l2 << ','
            << r.report.wall_time_rom << ',' << r.report.wall_time_fom << ',' << r.report.relative_wall_time << ','
            << (r.converged ? 1 : 0) << ",\"" << note << "\"\n";
    }
}

}  // namespace wst

#endif  // WST_SWEEP_HPP_
