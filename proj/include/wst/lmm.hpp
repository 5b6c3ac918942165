// Copyright 2026 The wst-lspg Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WST_LMM_HPP_
#define WST_LMM_HPP_

#include <array>
#include <string>
#include <string_view>

#include "wst/densekit.hpp"

namespace wst
{

enum class LmmName
{
    BDF1,
    BDF2,
};

/// Coefficients of one linear multistep step:
///   r^n = sum_j alpha[j] u^{n-j} - dt * sum_j beta[j] f(u^{n-j}),  j = 0..width.
struct LmmStep
{
    int width = 1;
    std::array<double, 3> alpha{};
    std::array<double, 3> beta{};
};

class LmmScheme
{
public:
    constexpr LmmScheme() = default;
    constexpr explicit LmmScheme(LmmName name) : name_(name) {}

    static LmmScheme bdf1() { return LmmScheme(LmmName::BDF1); }
    static LmmScheme bdf2() { return LmmScheme(LmmName::BDF2); }

    static LmmScheme parse(std::string_view s)
    {
        if (s == "BDF1" || s == "bdf1")
            return bdf1();
        if (s == "BDF2" || s == "bdf2")
            return bdf2();
        throw Error("unknown time scheme '" + std::string(s) + "' (expected BDF1 or BDF2)");
    }

    LmmName name() const { return name_; }
    std::string str() const { return name_ == LmmName::BDF1 ? "BDF1" : "BDF2"; }
    int width() const { return name_ == LmmName::BDF1 ? 1 : 2; }

    /// Coefficients of the scheme at full width.
    LmmStep full() const
    {
        if (name_ == LmmName::BDF1)
            return first_order();
        LmmStep s;
        s.width = 2;
        s.alpha = {3.0 / 2.0, -2.0, 1.0 / 2.0};
        s.beta = {1.0, 0.0, 0.0};
        return s;
    }

    /// Coefficients for the step that sits `since_restart` steps after the
    /// most recent restart (0 = the restart step itself). A restart always
    /// uses BDF1 so only one previous state is ever required.
    LmmStep at(Index since_restart) const
    {
        if (since_restart == 0)
            return first_order();
        return full();
    }

    static LmmStep first_order()
    {
        LmmStep s;
        s.width = 1;
        s.alpha = {1.0, -1.0, 0.0};
        s.beta = {1.0, 0.0, 0.0};
        return s;
    }

    friend bool operator==(const LmmScheme&, const LmmScheme&) = default;

private:
    LmmName name_ = LmmName::BDF1;
};

}  // namespace wst

#endif  // WST_LMM_HPP_
