#pragma once

#include "nldiff/common.hpp"
#include "nldiff/config.hpp"
#include "nldiff/dp.hpp"
#include "nldiff/functions.hpp"
#include "nldiff/girsanov.hpp"
#include "nldiff/grid.hpp"
#include "nldiff/model.hpp"
#include "nldiff/montecarlo.hpp"
#include "nldiff/pde.hpp"
#include "nldiff/quadrature.hpp"
#include "nldiff/rng.hpp"
#include "nldiff/runner.hpp"
#include "nldiff/semigroup.hpp"
