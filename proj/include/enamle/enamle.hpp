#pragma once

// Umbrella header for the full toolkit.

#include "enamle/bench.hpp"
#include "enamle/correlation.hpp"
#include "enamle/dataset.hpp"
#include "enamle/failure_sim.hpp"
#include "enamle/inference.hpp"
#include "enamle/learners.hpp"
#include "enamle/metering.hpp"
#include "enamle/rng.hpp"
#include "enamle/submodel_plan.hpp"
