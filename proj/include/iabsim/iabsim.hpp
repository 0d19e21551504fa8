#pragma once

#include "iabsim/channel.hpp"
#include "iabsim/config.hpp"
#include "iabsim/geometry.hpp"
#include "iabsim/harness.hpp"
#include "iabsim/mac.hpp"
#include "iabsim/mcs.hpp"
#include "iabsim/mobility.hpp"
#include "iabsim/rng.hpp"
#include "iabsim/scenario.hpp"
#include "iabsim/topology.hpp"
#include "iabsim/types.hpp"
#include "iabsim/util.hpp"
#include "iabsim/version.hpp"
