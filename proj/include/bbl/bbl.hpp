#pragma once

// Umbrella header for the whole library.

#include "bbl/means.hpp"
#include "bbl/grid_function.hpp"
#include "bbl/gfn_io.hpp"
#include "bbl/geometry.hpp"
#include "bbl/supconv.hpp"
#include "bbl/hull.hpp"
#include "bbl/transport.hpp"
#include "bbl/stability.hpp"
#include "bbl/lab.hpp"
