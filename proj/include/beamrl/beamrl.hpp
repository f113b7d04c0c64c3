// Umbrella header.
#pragma once

#include "beamrl/agent.hpp"
#include "beamrl/baselines.hpp"
#include "beamrl/config.hpp"
#include "beamrl/env.hpp"
#include "beamrl/harness.hpp"
#include "beamrl/linalg.hpp"
#include "beamrl/nn.hpp"
#include "beamrl/rf.hpp"
