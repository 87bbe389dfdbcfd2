#pragma once

// Estimators for singular sample covariance matrices built on ensembles of
// dimension-reducing Haar frames, with exact closed forms, large-dimension
// asymptotics, a Monte Carlo oracle, application pipelines, and a
// Ledoit-Wolf benchmark harness.

#include "applications.hpp"
#include "asymptotic.hpp"
#include "benchmark.hpp"
#include "core.hpp"
#include "estimate_types.hpp"
#include "estimator.hpp"
#include "exact.hpp"
#include "haar.hpp"
#include "logpoly.hpp"
#include "matrix.hpp"
#include "matrix_io.hpp"
