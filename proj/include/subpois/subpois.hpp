#pragma once
// Umbrella header.

#include "subpois/analytic.hpp"
#include "subpois/bernstein.hpp"
#include "subpois/conditional.hpp"
#include "subpois/dist_table.hpp"
#include "subpois/errors.hpp"
#include "subpois/hitting.hpp"
#include "subpois/io.hpp"
#include "subpois/polyexp.hpp"
#include "subpois/rng.hpp"
#include "subpois/simulation.hpp"
#include "subpois/suites.hpp"
#include "subpois/validation.hpp"
