#pragma once

// Umbrella header: penalty-form distributionally robust empirical
// optimization with phi-divergence ambiguity, small-delta expansions of the
// out-of-sample reward, and bootstrap calibration of the robustness
// parameter via the robust mean-variance frontier.

#include "dromv/asymptotics.hpp"
#include "dromv/common.hpp"
#include "dromv/config.hpp"
#include "dromv/csv.hpp"
#include "dromv/divergence.hpp"
#include "dromv/empirical.hpp"
#include "dromv/frontier.hpp"
#include "dromv/models.hpp"
#include "dromv/optimize.hpp"
#include "dromv/reward_model.hpp"
#include "dromv/robust.hpp"
#include "dromv/suites.hpp"
