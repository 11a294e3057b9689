#pragma once

// Umbrella header: Bayesian inference for beta-ARMA time series on (0,1).

#include "barma/analysis.hpp"
#include "barma/csv.hpp"
#include "barma/diagnostics.hpp"
#include "barma/dual.hpp"
#include "barma/fit.hpp"
#include "barma/forecast.hpp"
#include "barma/math.hpp"
#include "barma/matrix.hpp"
#include "barma/model.hpp"
#include "barma/model_select.hpp"
#include "barma/parallel.hpp"
#include "barma/posterior.hpp"
#include "barma/rng.hpp"
#include "barma/sampler.hpp"
#include "barma/simulate.hpp"
#include "barma/version.hpp"
