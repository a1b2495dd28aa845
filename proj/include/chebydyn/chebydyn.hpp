#pragma once

#include "bisection.hpp"
#include "cml.hpp"
#include "correlations.hpp"
#include "density.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "maps.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "rational.hpp"
#include "spectral.hpp"
