#pragma once

// Umbrella header: the whole library.

#include "collision.hpp"
#include "config.hpp"
#include "conservation.hpp"
#include "diagnostics.hpp"
#include "direct_oracle.hpp"
#include "error.hpp"
#include "grid.hpp"
#include "kernels.hpp"
#include "limits.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "solver.hpp"
#include "special.hpp"
#include "transform.hpp"
#include "vec3.hpp"
#include "weight_io.hpp"
#include "weights.hpp"
