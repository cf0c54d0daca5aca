#pragma once

// Umbrella header for the Gaussian Fredholm process toolkit.

#include "gfp/errors.hpp"
#include "gfp/expr.hpp"
#include "gfp/fredholm.hpp"
#include "gfp/functionals.hpp"
#include "gfp/grid.hpp"
#include "gfp/ibp.hpp"
#include "gfp/io.hpp"
#include "gfp/kernel.hpp"
#include "gfp/simulate.hpp"
#include "gfp/step_function.hpp"
