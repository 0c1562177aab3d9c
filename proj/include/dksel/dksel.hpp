// Copyright (C) 2026 The dksel authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "dksel/core.hpp"
#include "dksel/objective.hpp"
#include "dksel/fw_solver.hpp"
#include "dksel/baselines.hpp"
#include "dksel/oracle.hpp"
#include "dksel/methods.hpp"
#include "dksel/metrics.hpp"
#include "dksel/bench.hpp"
#include "dksel/io.hpp"
