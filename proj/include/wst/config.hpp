// Copyright 2026 The wst-lspg Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WST_CONFIG_HPP_
#define WST_CONFIG_HPP_

// Study configuration: an INI-style file of key=value pairs grouped in
// [sections]. Every key must be known; list-valued keys take comma
// separated values. Lines starting with ';' or '#' are comments.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <functional>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "wst/burgers.hpp"
#include "wst/lmm.hpp"
#include "wst/solver.hpp"

namespace wst
{

struct Config
{
    // [grid]
    Index n_cells = 200;
    double x_min = 0.0;
    double x_max = 100.0;
    // [time]
    double dt = 0.1;
    Index n_steps = 256;
    LmmScheme scheme = LmmScheme::bdf1();
    // [params]
    ParameterRange mu1{2.0, 4.1, 20};
    ParameterRange mu2{0.013, 0.02, 5};
    /// Residual training grid; a zero count means "same as the state grid".
    Index residual_mu1_count = 0;
    Index residual_mu2_count = 0;
    std::vector<Parameters> test{{4.0714, 0.0185}};
    // [windows]
    std::vector<double> l_w{25.6};
    std::vector<double> l_s{0.1};
    // [energies]
    std::vector<double> e_s{0.999};
    std::vector<double> e_t{0.99};
    std::vector<double> e_rs{0.999};
    std::vector<double> e_rt{0.999};
    // [gnat]
    std::vector<Index> z_t{5};
    std::vector<Index> z_s{40};
    Index n_sub_r = 1;
    // [solver]
    GaussNewtonConfig solver;
    // [sweep]
    int repetitions = 5;
    bool sweep_lspg = true;
    bool sweep_gnat = false;

    SpatialGrid grid() const { return SpatialGrid(n_cells, x_min, x_max); }
    std::vector<Parameters> training() const { return sample_parameter_grid(mu1, mu2); }
    std::vector<Parameters> residual_training() const
    {
        if (residual_mu1_count == 0 && residual_mu2_count == 0)
            return training();
        ParameterRange r1 = mu1;
        ParameterRange r2 = mu2;
        if (residual_mu1_count > 0)
            r1.count = residual_mu1_count;
        if (residual_mu2_count > 0)
            r2.count = residual_mu2_count;
        return sample_parameter_grid(r1, r2);
    }
};

namespace detail
{

inline std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
    {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos)
            throw Error("config: empty entry in list '" + s + "'");
        out.push_back(item.substr(b, e - b + 1));
    }
    if (out.empty())
        throw Error("config: empty list");
    return out;
}

inline double parse_real(const std::string& key, const std::string& s)
{
    std::size_t pos = 0;
    double v = 0.0;
    try
    {
        v = std::stod(s, &pos);
    }
    catch (const std::exception&)
    {
        pos = 0;
    }
    if (pos != s.size() || !std::isfinite(v))
        throw Error("config: " + key + " = '" + s + "' is not a number");
    return v;
}

inline Index parse_count(const std::string& key, const std::string& s)
{
    const double v = parse_real(key, s);
    if (v < 0.0 || v != std::floor(v))
        throw Error("config: " + key + " = '" + s + "' is not a non-negative integer");
    return static_cast<Index>(v);
}

inline bool parse_bool(const std::string& key, const std::string& s)
{
    if (s == "true" || s == "1" || s == "yes" || s == "on")
        return true;
    if (s == "false" || s == "0" || s == "no" || s == "off")
        return false;
    throw Error("config: " + key + " = '" + s + "' is not a boolean");
}

inline std::vector<double> parse_reals(const std::string& key, const std::string& s)
{
    std::vector<double> out;
    for (const std::string& item : split_list(s))
        out.push_back(parse_real(key, item));
    return out;
}

inline std::vector<Index> parse_counts(const std::string& key, const std::string& s)
{
    std::vector<Index> out;
    for (const std::string& item : split_list(s))
        out.push_back(parse_count(key, item));
    return out;
}

inline void check_energy(const std::string& key, const std::vector<double>& v)
{
    for (double e : v)
        if (!(e > 0.0 && e <= 1.0))
            throw Error("config: " + key + " must lie in (0, 1], got " + std::to_string(e));
}

}  // namespace detail

/// Parses a configuration from a stream. Unknown sections or keys, and
/// malformed values, are errors.
inline Config parse_config(std::istream& in)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    // '#' comments are accepted in addition to the ';' comments the INI
    // reader understands natively.
    std::stringstream filtered;
    std::string line;
    while (std::getline(in, line))
    {
        const auto b = line.find_first_not_of(" \t");
        if (b != std::string::npos && line[b] == '#')
            filtered << '\n';
        else
            filtered << line << '\n';
    }
    try
    {
        pt::read_ini(filtered, tree);
    }
    catch (const pt::ini_parser_error& e)
    {
        throw Error(std::string("config: ") + e.what());
    }

    Config c;
    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, std::map<std::string, Setter>> schema{
        {"grid",
         {{"n_cells", [&](auto& k, auto& v) { c.n_cells = detail::parse_count(k, v); }},
          {"x_min", [&](auto& k, auto& v) { c.x_min = detail::parse_real(k, v); }},
          {"x_max", [&](auto& k, auto& v) { c.x_max = detail::parse_real(k, v); }}}},
        {"time",
         {{"dt", [&](auto& k, auto& v) { c.dt = detail::parse_real(k, v); }},
          {"n_steps", [&](auto& k, auto& v) { c.n_steps = detail::parse_count(k, v); }},
          {"scheme", [&](auto&, auto& v) { c.scheme = LmmScheme::parse(v); }}}},
        {"params",
         {{"mu1_min", [&](auto& k, auto& v) { c.mu1.lo = detail::parse_real(k, v); }},
          {"mu1_max", [&](auto& k, auto& v) { c.mu1.hi = detail::parse_real(k, v); }},
          {"mu1_count", [&](auto& k, auto& v) { c.mu1.count = detail::parse_count(k, v); }},
          {"mu2_min", [&](auto& k, auto& v) { c.mu2.lo = detail::parse_real(k, v); }},
          {"mu2_max", [&](auto& k, auto& v) { c.mu2.hi = detail::parse_real(k, v); }},
          {"mu2_count", [&](auto& k, auto& v) { c.mu2.count = detail::parse_count(k, v); }},
          {"residual_mu1_count", [&](auto& k, auto& v) { c.residual_mu1_count = detail::parse_count(k, v); }},
          {"residual_mu2_count", [&](auto& k, auto& v) { c.residual_mu2_count = detail::parse_count(k, v); }},
          {"test_mu1",
           [&](auto& k, auto& v) {
               const auto xs = detail::parse_reals(k, v);
               c.test.resize(xs.size(), c.test.empty() ? Parameters{} : c.test.front());
               for (std::size_t i = 0; i < xs.size(); ++i)
                   c.test[i].mu1 = xs[i];
           }},
          {"test_mu2",
           [&](auto& k, auto& v) {
               const auto xs = detail::parse_reals(k, v);
               c.test.resize(xs.size(), c.test.empty() ? Parameters{} : c.test.front());
               for (std::size_t i = 0; i < xs.size(); ++i)
                   c.test[i].mu2 = xs[i];
           }}}},
        {"windows",
         {{"l_w", [&](auto& k, auto& v) { c.l_w = detail::parse_reals(k, v); }},
          {"l_s", [&](auto& k, auto& v) { c.l_s = detail::parse_reals(k, v); }}}},
        {"energies",
         {{"e_s", [&](auto& k, auto& v) { c.e_s = detail::parse_reals(k, v); }},
          {"e_t", [&](auto& k, auto& v) { c.e_t = detail::parse_reals(k, v); }},
          {"e_rs", [&](auto& k, auto& v) { c.e_rs = detail::parse_reals(k, v); }},
          {"e_rt", [&](auto& k, auto& v) { c.e_rt = detail::parse_reals(k, v); }}}},
        {"gnat",
         {{"z_t", [&](auto& k, auto& v) { c.z_t = detail::parse_counts(k, v); }},
          {"z_s", [&](auto& k, auto& v) { c.z_s = detail::parse_counts(k, v); }},
          {"n_sub_r", [&](auto& k, auto& v) { c.n_sub_r = detail::parse_count(k, v); }}}},
        {"solver",
         {{"tol", [&](auto& k, auto& v) { c.solver.tol = detail::parse_real(k, v); }},
          {"max_iters", [&](auto& k, auto& v) { c.solver.max_iters = static_cast<int>(detail::parse_count(k, v)); }},
          {"line_search", [&](auto&, auto& v) { c.solver.line_search = parse_line_search(v); }},
          {"abort_on_divergence",
           [&](auto& k, auto& v) { c.solver.abort_on_divergence = detail::parse_bool(k, v); }}}},
        {"sweep",
         {{"repetitions", [&](auto& k, auto& v) { c.repetitions = static_cast<int>(detail::parse_count(k, v)); }},
          {"lspg", [&](auto& k, auto& v) { c.sweep_lspg = detail::parse_bool(k, v); }},
          {"gnat", [&](auto& k, auto& v) { c.sweep_gnat = detail::parse_bool(k, v); }}}},
    };

    // test_mu2 must not shrink a test list set by test_mu1 (or vice versa),
    // so both lists are checked for equal length below.
    std::size_t n_mu1 = 0;
    std::size_t n_mu2 = 0;
    for (const auto& [section, body] : tree)
    {
        if (!body.data().empty())
            throw Error("config: key '" + section + "' outside of a section");
        const auto sec = schema.find(section);
        if (sec == schema.end())
            throw Error("config: unknown section [" + section + "]");
        for (const auto& [key, node] : body)
        {
            const auto it = sec->second.find(key);
            if (it == sec->second.end())
                throw Error("config: unknown key '" + key + "' in [" + section + "]");
            const std::string value = node.data();
            const std::string name = section + "." + key;
            it->second(name, value);
            if (key == "test_mu1")
                n_mu1 = detail::split_list(value).size();
            if (key == "test_mu2")
                n_mu2 = detail::split_list(value).size();
        }
    }
    if (n_mu1 && n_mu2 && n_mu1 != n_mu2)
        throw Error("config: params.test_mu1 and params.test_mu2 list different numbers of test parameters");

    if (c.n_cells < 1 || !(c.x_max > c.x_min))
        throw Error("config: invalid grid");
    if (!(c.dt > 0.0) || c.n_steps < 1)
        throw Error("config: invalid time discretization");
    if (c.mu1.count < 1 || c.mu2.count < 1)
        throw Error("config: parameter counts must be positive");
    for (const char* k : {"e_s", "e_t", "e_rs", "e_rt"})
    {
        const std::string key(k);
        detail::check_energy("energies." + key, key == "e_s"    ? c.e_s
                                                : key == "e_t"  ? c.e_t
                                                : key == "e_rs" ? c.e_rs
                                                                : c.e_rt);
    }
    if (c.repetitions < 1)
        throw Error("config: sweep.repetitions must be at least 1");
    if (c.n_sub_r < 1)
        throw Error("config: gnat.n_sub_r must be at least 1");
    c.solver.validate();
    return c;
}

inline Config parse_config_string(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

inline Config load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("config: cannot open '" + path + "'");
    try
    {
        return parse_config(in);
    }
    catch (const Error& e)
    {
        throw Error(path + ": " + e.what());
    }
}

}  // namespace wst

#endif  // WST_CONFIG_HPP_
