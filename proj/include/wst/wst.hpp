// Copyright 2026 The wst-lspg Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef WST_WST_HPP_
#define WST_WST_HPP_

#include "wst/bounds.hpp"
#include "wst/burgers.hpp"
#include "wst/config.hpp"
#include "wst/densekit.hpp"
#include "wst/fom.hpp"
#include "wst/hyper.hpp"
#include "wst/io.hpp"
#include "wst/lmm.hpp"
#include "wst/metrics.hpp"
#include "wst/model.hpp"
#include "wst/pipeline.hpp"
#include "wst/solver.hpp"
#include "wst/subspaces.hpp"
#include "wst/sweep.hpp"
#include "wst/trajectory.hpp"
#include "wst/windows.hpp"

#endif  // WST_WST_HPP_
