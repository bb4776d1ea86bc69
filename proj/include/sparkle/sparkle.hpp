#pragma once

// Umbrella header.

#include "sparkle/additive_model.hpp"
#include "sparkle/baselines.hpp"
#include "sparkle/common.hpp"
#include "sparkle/config.hpp"
#include "sparkle/csv.hpp"
#include "sparkle/dp_estimator.hpp"
#include "sparkle/environments.hpp"
#include "sparkle/epochs.hpp"
#include "sparkle/harness.hpp"
#include "sparkle/kernel.hpp"
#include "sparkle/policy.hpp"
#include "sparkle/rng.hpp"
#include "sparkle/screening.hpp"
#include "sparkle/stats.hpp"
#include "sparkle/svg.hpp"
