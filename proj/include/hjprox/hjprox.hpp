#pragma once

#include "hjprox/analytic.hpp"
#include "hjprox/config.hpp"
#include "hjprox/core.hpp"
#include "hjprox/csv.hpp"
#include "hjprox/experiments.hpp"
#include "hjprox/hj_prox.hpp"
#include "hjprox/oracle.hpp"
#include "hjprox/parallel.hpp"
#include "hjprox/quadrature.hpp"
#include "hjprox/rng.hpp"
#include "hjprox/softmax.hpp"
#include "hjprox/solvers.hpp"
#include "hjprox/svg.hpp"
#include "hjprox/version.hpp"
