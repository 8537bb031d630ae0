#pragma once

// Umbrella header for the gsmdet library.

#include "gsmdet/bench.hpp"
#include "gsmdet/channel.hpp"
#include "gsmdet/common.hpp"
#include "gsmdet/detectors.hpp"
#include "gsmdet/dnn_detector.hpp"
#include "gsmdet/gsm.hpp"
#include "gsmdet/kvfile.hpp"
#include "gsmdet/mlp.hpp"
#include "gsmdet/numerics.hpp"
