#pragma once

// Umbrella header for the whole toolkit. Individual headers stay usable on
// their own; artifacts.hpp is excluded so pulling this in does not force a
// JSON dependency.

#include "fosmpc/augment.hpp"
#include "fosmpc/config.hpp"
#include "fosmpc/csv.hpp"
#include "fosmpc/errors.hpp"
#include "fosmpc/experiment.hpp"
#include "fosmpc/gl.hpp"
#include "fosmpc/model.hpp"
#include "fosmpc/mpc.hpp"
#include "fosmpc/qp.hpp"
#include "fosmpc/riccati.hpp"
#include "fosmpc/rng.hpp"
#include "fosmpc/simulate.hpp"
#include "fosmpc/strategies.hpp"
#include "fosmpc/svg.hpp"
#include "fosmpc/sysid.hpp"
#include "fosmpc/trace.hpp"
