// Copyright 2026 The wst-lspg Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WST_IO_HPP_
#define WST_IO_HPP_

// File formats.
//
//   Trajectory (.wstr): "WSTR", u32 version = 1, u64 n_space, u64 n_time,
//   f64 dt, then (n_time + 1) * n_space little-endian doubles, column-major,
//   initial condition first. Matrices reuse the container with dt = 0 and
//   n_time = cols - 1.
//
//   Basis bundle: a directory holding manifest.txt (key=value) and one .wstr
//   matrix per spatial basis, temporal basis and assembled sub-window basis.
//
//   Mesh file: per window the lines "window k", "t: ...", "s: ...".

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "wst/bounds.hpp"
#include "wst/hyper.hpp"
#include "wst/metrics.hpp"
#include "wst/subspaces.hpp"
#include "wst/trajectory.hpp"

namespace wst
{

static_assert(std::endian::native == std::endian::little, "the .wstr writer assumes a little-endian host");

namespace io
{

namespace fs = std::filesystem;

inline constexpr char kMagic[4] = {'W', 'S', 'T', 'R'};
inline constexpr std::uint32_t kVersion = 1;

namespace detail
{

template <class T>
void put(std::ostream& out, T v)
{
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in, const std::string& path, const char* what)
{
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in)
        throw Error(path + ": truncated file while reading " + what);
    return v;
}

inline std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out)
{
    std::ofstream out(path, mode);
    if (!out)
        throw Error("cannot open '" + path + "' for writing");
    return out;
}

inline std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in)
{
    std::ifstream in(path, mode);
    if (!in)
        throw Error("cannot open '" + path + "'");
    return in;
}

// Raw container: rows x cols doubles plus dt.
inline void write_raw(const std::string& path, const Matrix& data, double dt)
{
    if (data.cols() < 1)
        throw Error("write: '" + path + "' would hold a matrix without columns");
    std::ofstream out = open_out(path, std::ios::binary);
    out.write(kMagic, 4);
    put<std::uint32_t>(out, kVersion);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(data.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(data.cols() - 1));
    put<double>(out, dt);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(data.size())));
    if (!out)
        throw Error("write failed for '" + path + "'");
}

inline Matrix read_raw(const std::string& path, double& dt)
{
    std::ifstream in = open_in(path, std::ios::binary);
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw Error(path + ": not a WSTR file (bad magic)");
    const auto version = get<std::uint32_t>(in, path, "version");
    if (version != kVersion)
        throw Error(path + ": unsupported WSTR version " + std::to_string(version));
    const auto ns = get<std::uint64_t>(in, path, "n_space");
    const auto nt = get<std::uint64_t>(in, path, "n_time");
    dt = get<double>(in, path, "dt");
    constexpr std::uint64_t cap = std::uint64_t{1} << 40;
    if (ns > cap || nt >= cap || ns * (nt + 1) > cap)
        throw Error(path + ": implausible dimensions " + std::to_string(ns) + " x " + std::to_string(nt + 1));
    Matrix m(static_cast<Index>(ns), static_cast<Index>(nt + 1));
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())))
        throw Error(path + ": truncated file (expected " + std::to_string(m.size()) + " values)");
    in.peek();
    if (!in.eof())
        throw Error(path + ": trailing bytes after the data");
    return m;
}

}  // namespace detail

inline void write_trajectory(const std::string& path, const Trajectory& t)
{
    Matrix all(t.n_space(), t.n_time() + 1);
    all.col(0) = t.initial;
    all.rightCols(t.n_time()) = t.states;
    detail::write_raw(path, all, t.dt);
}

inline Trajectory read_trajectory(const std::string& path)
{
    double dt = 0.0;
    const Matrix all = detail::read_raw(path, dt);
    Trajectory t(all.col(0), all.cols() - 1, dt);
    t.states = all.rightCols(all.cols() - 1);
    return t;
}

inline void write_matrix(const std::string& path, const Matrix& m) { detail::write_raw(path, m, 0.0); }

inline Matrix read_matrix(const std::string& path)
{
    double dt = 0.0;
    return detail::read_raw(path, dt);
}

/// CSV with header t,x,u: one row per (step, cell), initial condition included.
inline void write_trajectory_csv(const std::string& path, const Trajectory& t, const SpatialGrid& grid)
{
    if (grid.n_cells != t.n_space())
        throw Error("write_trajectory_csv: grid has " + std::to_string(grid.n_cells) + " cells, trajectory has " +
                    std::to_string(t.n_space()));
    std::ofstream out = detail::open_out(path);
    out << "t,x,u\n" << std::setprecision(17);
    for (Index n = 0; n <= t.n_time(); ++n)
    {
        const Vector u = t.state(n);
        const double time = t.dt * static_cast<double>(n);
        for (Index i = 0; i < t.n_space(); ++i)
            out << time << ',' << grid.center(i) << ',' << u(i) << '\n';
    }
}

/// Gauss-Newton history of every window.
inline void write_convergence_csv(const std::string& path, const std::vector<WindowSolveReport>& reports)
{
    std::ofstream out = detail::open_out(path);
    out << "window,iteration,grad_norm,residual_norm,step_norm,lambda\n" << std::setprecision(17);
    for (const WindowSolveReport& r : reports)
    {
        const std::size_t n = r.gradient_norms.size();
        for (std::size_t i = 0; i < n; ++i)
        {
            auto at = [i](const std::vector<double>& v) {
                return i < v.size() ? v[i] : std::numeric_limits<double>::quiet_NaN();
            };
            out << r.window << ',' << i << ',' << at(r.gradient_norms) << ',' << at(r.residual_norms) << ','
                << at(r.step_norms) << ',' << at(r.lambdas) << '\n';
        }
    }
}

inline nlohmann::json to_json(const ErrorReport& e)
{
    return {{"mse", e.mse},
            {"imse", e.imse},
            {"residual_l2", e.residual_l2},
            {"wall_time_rom", e.wall_time_rom},
            {"wall_time_fom", e.wall_time_fom},
            {"relative_wall_time", e.relative_wall_time}};
}

inline ErrorReport error_report_from_json(const nlohmann::json& j)
{
    ErrorReport e;
    try
    {
        e.mse = j.at("mse").get<double>();
        e.imse = j.at("imse").get<double>();
        e.residual_l2 = j.at("residual_l2").get<double>();
        e.wall_time_rom = j.at("wall_time_rom").get<double>();
        e.wall_time_fom = j.at("wall_time_fom").get<double>();
        e.relative_wall_time = j.at("relative_wall_time").get<double>();
    }
    catch (const nlohmann::json::exception& ex)
    {
        throw Error(std::string("error report: ") + ex.what());
    }
    return e;
}

/// Appends one JSON-lines record; `extra` fields are merged in.
inline void append_error_report(const std::string& path, const ErrorReport& e,
                                const nlohmann::json& extra = nlohmann::json::object())
{
    nlohmann::json j = to_json(e);
    j.update(extra);
    std::ofstream out = detail::open_out(path, std::ios::app);
    out << j.dump() << '\n';
}

inline std::vector<nlohmann::json> read_json_lines(const std::string& path)
{
    std::ifstream in = detail::open_in(path);
    std::vector<nlohmann::json> out;
    std::string line;
    Index n = 0;
    while (std::getline(in, line))
    {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try
        {
            out.push_back(nlohmann::json::parse(line));
        }
        catch (const nlohmann::json::exception& ex)
        {
            throw Error(path + ":" + std::to_string(n) + ": " + ex.what());
        }
    }
    return out;
}

/// One row per window. kappa_f is an empirical lower estimate, so the
/// right-hand sides are approximate.
inline void write_bounds_csv(const std::string& path, const std::vector<BoundReport>& reports)
{
    std::ofstream out = detail::open_out(path);
    out << "kind,window,kappa_f,sigma_min_A,sigma_max_B,sigma_max_AIC,sigma_max_BIC,C1,C2,residual_norm,ic_error,"
           "rhs,global_rhs,lhs,a2_satisfied,violated,simplified\n"
        << std::setprecision(12);
    for (const BoundReport& r : reports)
        for (const WindowBound& w : r.windows)
            out << r.kind << ',' << w.window << ',' << w.kappa_f << ',' << w.sigma_min_A << ',' << w.sigma_max_B << ','
                << w.sigma_max_AIC << ',' << w.sigma_max_BIC << ',' << w.C1 << ',' << w.C2 << ',' << w.residual_norm
                << ',' << w.ic_error << ',' << w.rhs << ',' << w.global_rhs << ',' << w.lhs << ','
                << (w.a2_satisfied ? 1 : 0) << ',' << (w.violated() ? 1 : 0) << ',' << r.simplified << '\n';
}

// ---------------------------------------------------------------------------
// Manifests and bundles

using Manifest = std::map<std::string, std::string>;

inline void write_manifest(const std::string& path, const Manifest& m)
{
    std::ofstream out = detail::open_out(path);
    for (const auto& [k, v] : m)
        out << k << '=' << v << '\n';
}

inline Manifest read_manifest(const std::string& path)
{
    std::ifstream in = detail::open_in(path);
    Manifest m;
    std::string line;
    Index n = 0;
    while (std::getline(in, line))
    {
        ++n;
        if (line.empty() || line[0] == '#')
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos || eq == 0)
            throw Error(path + ":" + std::to_string(n) + ": expected key=value");
        m[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return m;
}

inline const std::string& manifest_get(const Manifest& m, const std::string& key, const std::string& path)
{
    const auto it = m.find(key);
    if (it == m.end())
        throw Error(path + ": manifest lacks '" + key + "'");
    return it->second;
}

inline std::string format_real(double v)
{
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

/// "4,4;8" for windows {4, 4} and {8}.
inline std::string format_windows(const WindowPlan& plan)
{
    std::string s;
    for (Index k = 0; k < plan.n_windows(); ++k)
    {
        if (k)
            s += ';';
        for (Index m = 0; m < plan.n_sub(k); ++m)
        {
            if (m)
                s += ',';
            s += std::to_string(plan.sub_steps(k, m));
        }
    }
    return s;
}

inline std::vector<std::vector<Index>> parse_windows(const std::string& s)
{
    std::vector<std::vector<Index>> out;
    std::stringstream ws(s);
    std::string win;
    while (std::getline(ws, win, ';'))
    {
        std::vector<Index> subs;
        std::stringstream ss(win);
        std::string item;
        while (std::getline(ss, item, ','))
        {
            try
            {
                subs.push_back(static_cast<Index>(std::stoll(item)));
            }
            catch (const std::exception&)
            {
                throw Error("bad window layout '" + s + "'");
            }
        }
        out.push_back(std::move(subs));
    }
    return out;
}

inline void plan_to_manifest(const WindowPlan& plan, Manifest& m)
{
    m["n_time"] = std::to_string(plan.n_time());
    m["dt"] = format_real(plan.dt());
    m["scheme"] = plan.scheme().str();
    m["l_w"] = format_real(plan.l_w());
    m["l_s"] = format_real(plan.l_s());
    m["windows"] = format_windows(plan);
}

inline WindowPlan plan_from_manifest(const Manifest& m, const std::string& path)
{
    const Index nt = static_cast<Index>(std::stoll(manifest_get(m, "n_time", path)));
    const double dt = std::stod(manifest_get(m, "dt", path));
    const LmmScheme scheme = LmmScheme::parse(manifest_get(m, "scheme", path));
    const auto layout = parse_windows(manifest_get(m, "windows", path));
    const double l_w = std::stod(manifest_get(m, "l_w", path));
    const double l_s = std::stod(manifest_get(m, "l_s", path));
    // Uniform plans keep their nominal lengths; anything else is rebuilt
    // from the layout.
    try
    {
        WindowPlan u = WindowPlan::uniform(nt, dt, l_w, l_s, scheme);
        if (format_windows(u) == format_windows(WindowPlan(nt, dt, layout, scheme)))
            return u;
    }
    catch (const Error&)
    {
    }
    return WindowPlan(nt, dt, layout, scheme);
}

inline std::string sub_name(const char* what, Index k, Index m)
{
    return std::string(what) + "_" + std::to_string(k) + "_" + std::to_string(m);
}

/// Writes state bases and, when given, the initial-guess regression.
inline void write_basis_bundle(const std::string& dir, const TrainedBases& b, const InitialGuessModel* guess = nullptr)
{
    fs::create_directories(dir);
    Manifest m;
    m["kind"] = "state";
    plan_to_manifest(b.plan, m);
    m["e_s"] = format_real(b.e_s);
    m["e_t"] = format_real(b.e_t);
    m["total_cols"] = std::to_string(b.total_cols());
    for (Index k = 0; k < b.plan.n_windows(); ++k)
        for (Index mm = 0; mm < b.plan.n_sub(k); ++mm)
        {
            const SubwindowBasis& s = b.subs[static_cast<std::size_t>(k)][static_cast<std::size_t>(mm)];
            std::string counts;
            for (std::size_t i = 0; i < s.temporal.size(); ++i)
                counts += (i ? "," : "") + std::to_string(s.temporal[i].cols());
            m[sub_name("n_s", k, mm)] = std::to_string(s.spatial.cols());
            m[sub_name("n_t", k, mm)] = counts;
            write_matrix((fs::path(dir) / (sub_name("phi", k, mm) + ".wstr")).string(), s.spatial);
            for (std::size_t i = 0; i < s.temporal.size(); ++i)
                write_matrix((fs::path(dir) / (sub_name("psi", k, mm) + "_" + std::to_string(i) + ".wstr")).string(),
                             s.temporal[i]);
            write_matrix((fs::path(dir) / (sub_name("pi", k, mm) + ".wstr")).string(), s.assembled);
        }
    if (guess)
    {
        m["guess"] = guess->nearest_neighbor ? "nearest" : "affine";
        Matrix params(2, static_cast<Index>(guess->params.size()));
        for (std::size_t c = 0; c < guess->params.size(); ++c)
            params.col(static_cast<Index>(c)) << guess->params[c].mu1, guess->params[c].mu2;
        write_matrix((fs::path(dir) / "guess_params.wstr").string(), params);
        for (std::size_t k = 0; k < guess->targets.size(); ++k)
        {
            write_matrix((fs::path(dir) / ("guess_targets_" + std::to_string(k) + ".wstr")).string(),
                         guess->targets[k]);
            write_matrix((fs::path(dir) / ("guess_coef_" + std::to_string(k) + ".wstr")).string(),
                         guess->coefficients[k]);
        }
    }
    write_manifest((fs::path(dir) / "manifest.txt").string(), m);
}

struct BasisBundle
{
    TrainedBases bases;
    bool has_guess = false;
    InitialGuessModel guess;
};

inline BasisBundle read_basis_bundle(const std::string& dir)
{
    const std::string mpath = (fs::path(dir) / "manifest.txt").string();
    const Manifest m = read_manifest(mpath);
    if (manifest_get(m, "kind", mpath) != "state")
        throw Error(mpath + ": expected kind=state");
    BasisBundle out;
    TrainedBases& b = out.bases;
    b.plan = plan_from_manifest(m, mpath);
    b.e_s = std::stod(manifest_get(m, "e_s", mpath));
    b.e_t = std::stod(manifest_get(m, "e_t", mpath));
    for (Index k = 0; k < b.plan.n_windows(); ++k)
    {
        std::vector<SubwindowBasis> subs;
        for (Index mm = 0; mm < b.plan.n_sub(k); ++mm)
        {
            const Matrix phi = read_matrix((fs::path(dir) / (sub_name("phi", k, mm) + ".wstr")).string());
            std::vector<Matrix> psi;
            for (Index i = 0; i < phi.cols(); ++i)
                psi.push_back(read_matrix(
                    (fs::path(dir) / (sub_name("psi", k, mm) + "_" + std::to_string(i) + ".wstr")).string()));
            SubwindowBasis s = assemble_subwindow_basis(phi, psi);
            const Matrix stored = read_matrix((fs::path(dir) / (sub_name("pi", k, mm) + ".wstr")).string());
            if (stored.rows() != s.assembled.rows() || stored.cols() != s.assembled.cols() ||
                (stored - s.assembled).norm() > 1e-12 * std::max(1.0, stored.norm()))
                throw Error(dir + ": assembled basis of window " + std::to_string(k) + " sub-window " +
                            std::to_string(mm) + " disagrees with its factors");
            subs.push_back(std::move(s));
        }
        b.windows.push_back(assemble_window_basis(subs, b.plan, k));
        b.subs.push_back(std::move(subs));
    }
    const auto g = m.find("guess");
    if (g != m.end())
    {
        out.has_guess = true;
        out.guess.nearest_neighbor = g->second == "nearest";
        const Matrix params = read_matrix((fs::path(dir) / "guess_params.wstr").string());
        for (Index c = 0; c < params.cols(); ++c)
            out.guess.params.push_back({params(0, c), params(1, c)});
        for (Index k = 0; k < b.plan.n_windows(); ++k)
        {
            out.guess.targets.push_back(
                read_matrix((fs::path(dir) / ("guess_targets_" + std::to_string(k) + ".wstr")).string()));
            out.guess.coefficients.push_back(
                read_matrix((fs::path(dir) / ("guess_coef_" + std::to_string(k) + ".wstr")).string()));
        }
    }
    return out;
}

/// Residual bases of every window, kind=residual.
inline void write_residual_bundle(const std::string& dir, const WindowPlan& plan, const std::vector<ResidualBasis>& rbs,
                                  double e_rs, double e_rt)
{
    if (static_cast<Index>(rbs.size()) != plan.n_windows())
        throw Error("write_residual_bundle: residual bases do not cover every window");
    fs::create_directories(dir);
    Manifest m;
    m["kind"] = "residual";
    plan_to_manifest(plan, m);
    m["e_rs"] = format_real(e_rs);
    m["e_rt"] = format_real(e_rt);
    for (Index k = 0; k < plan.n_windows(); ++k)
    {
        const ResidualBasis& rb = rbs[static_cast<std::size_t>(k)];
        m["n_sub_r_" + std::to_string(k)] = std::to_string(rb.blocks.size());
        for (std::size_t mm = 0; mm < rb.blocks.size(); ++mm)
        {
            const Index q = static_cast<Index>(mm);
            std::string counts;
            for (std::size_t i = 0; i < rb.temporal[mm].size(); ++i)
                counts += (i ? "," : "") + std::to_string(rb.temporal[mm][i].cols());
            m[sub_name("n_rs", k, q)] = std::to_string(rb.spatial[mm].cols());
            m[sub_name("n_rt", k, q)] = counts;
            m[sub_name("steps", k, q)] = std::to_string(rb.sub_steps[mm]);
            write_matrix((fs::path(dir) / (sub_name("phi", k, q) + ".wstr")).string(), rb.spatial[mm]);
            for (std::size_t i = 0; i < rb.temporal[mm].size(); ++i)
                write_matrix((fs::path(dir) / (sub_name("psi", k, q) + "_" + std::to_string(i) + ".wstr")).string(),
                             rb.temporal[mm][i]);
            write_matrix((fs::path(dir) / (sub_name("pi", k, q) + ".wstr")).string(), rb.blocks[mm]);
        }
    }
    write_manifest((fs::path(dir) / "manifest.txt").string(), m);
}

inline std::vector<ResidualBasis> read_residual_bundle(const std::string& dir, WindowPlan* plan_out = nullptr)
{
    const std::string mpath = (fs::path(dir) / "manifest.txt").string();
    const Manifest m = read_manifest(mpath);
    if (manifest_get(m, "kind", mpath) != "residual")
        throw Error(mpath + ": expected kind=residual");
    const WindowPlan plan = plan_from_manifest(m, mpath);
    std::vector<ResidualBasis> out;
    for (Index k = 0; k < plan.n_windows(); ++k)
    {
        ResidualBasis rb;
        const Index n_sub = static_cast<Index>(std::stoll(manifest_get(m, "n_sub_r_" + std::to_string(k), mpath)));
        for (Index q = 0; q < n_sub; ++q)
        {
            const Matrix phi = read_matrix((fs::path(dir) / (sub_name("phi", k, q) + ".wstr")).string());
            std::vector<Matrix> psi;
            for (Index i = 0; i < phi.cols(); ++i)
                psi.push_back(read_matrix(
                    (fs::path(dir) / (sub_name("psi", k, q) + "_" + std::to_string(i) + ".wstr")).string()));
            rb.n_space = phi.rows();
            rb.sub_steps.push_back(static_cast<Index>(std::stoll(manifest_get(m, sub_name("steps", k, q), mpath))));
            rb.spatial.push_back(phi);
            rb.temporal.push_back(std::move(psi));
            rb.blocks.push_back(read_matrix((fs::path(dir) / (sub_name("pi", k, q) + ".wstr")).string()));
        }
        out.push_back(std::move(rb));
    }
    if (plan_out)
        *plan_out = plan;
    return out;
}

inline void write_meshes(const std::string& path, const std::vector<SampleMesh>& meshes)
{
    std::ofstream out = detail::open_out(path);
    for (std::size_t k = 0; k < meshes.size(); ++k)
    {
        out << "window " << k << "\nt:";
        for (Index t : meshes[k].temporal)
            out << ' ' << t;
        out << "\ns:";
        for (Index s : meshes[k].spatial)
            out << ' ' << s;
        out << '\n';
    }
}

inline std::vector<SampleMesh> read_meshes(const std::string& path)
{
    std::ifstream in = detail::open_in(path);
    std::vector<SampleMesh> out;
    std::string line;
    Index n = 0;
    auto fail = [&](const std::string& why) { throw Error(path + ":" + std::to_string(n) + ": " + why); };
    auto indices = [&](const std::string& rest) {
        std::vector<Index> v;
        std::istringstream ss(rest);
        long long x = 0;
        while (ss >> x)
        {
            if (x < 0)
                fail("negative index");
            v.push_back(static_cast<Index>(x));
        }
        if (!ss.eof())
            fail("malformed index list");
        return v;
    };
    while (std::getline(in, line))
    {
        ++n;
        if (line.empty())
            continue;
        if (line.rfind("window ", 0) == 0)
        {
            if (std::stoll(line.substr(7)) != static_cast<long long>(out.size()))
                fail("windows out of order");
            out.emplace_back();
        }
        else if (line.rfind("t:", 0) == 0)
        {
            if (out.empty())
                fail("t: before any window");
            out.back().temporal = indices(line.substr(2));
        }
        else if (line.rfind("s:", 0) == 0)
        {
            if (out.empty())
                fail("s: before any window");
            out.back().spatial = indices(line.substr(2));
        }
        else
            fail("unrecognized line '" + line + "'");
    }
    return out;
}

}  // namespace io
}  // namespace wst

#endif  // WST_IO_HPP_
