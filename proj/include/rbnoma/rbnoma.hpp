#pragma once

#include "rbnoma/allocation.hpp"
#include "rbnoma/channel.hpp"
#include "rbnoma/common.hpp"
#include "rbnoma/config.hpp"
#include "rbnoma/csv_output.hpp"
#include "rbnoma/metrics.hpp"
#include "rbnoma/phy.hpp"
#include "rbnoma/random.hpp"
#include "rbnoma/receiver.hpp"
#include "rbnoma/scenario.hpp"
#include "rbnoma/sidelink_types.hpp"
#include "rbnoma/simulation.hpp"
