#pragma once

#include "density_learning.hpp"
#include "ep_finite.hpp"
#include "ep_zero.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "omp.hpp"
#include "parallel.hpp"
#include "phase.hpp"
#include "problem_gen.hpp"
#include "rng.hpp"
#include "site_ops.hpp"
#include "spike_slab.hpp"
#include "types.hpp"
#include "version.hpp"
