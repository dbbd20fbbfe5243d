// SPDX-License-Identifier: Apache-2.0
// disoul: direct localization of a radio source from distributed array snapshots
#pragma once

#include "disoul/arrays.hpp"
#include "disoul/baselines.hpp"
#include "disoul/channel.hpp"
#include "disoul/common.hpp"
#include "disoul/geometry.hpp"
#include "disoul/harness.hpp"
#include "disoul/io.hpp"
#include "disoul/localizer.hpp"
#include "disoul/random.hpp"
#include "disoul/scenario.hpp"
#include "disoul/sparse_solver.hpp"
#include "disoul/timing.hpp"
#include "disoul/waveform.hpp"
