#pragma once

// Umbrella header.

#include "activation.hpp"
#include "arrivals.hpp"
#include "engines.hpp"
#include "instance.hpp"
#include "io.hpp"
#include "lp.hpp"
#include "montecarlo.hpp"
#include "ratiocalc.hpp"
#include "search.hpp"
