#pragma once

#include "pgfm/core.hpp"
#include "pgfm/derivatives.hpp"
#include "pgfm/extrapolation.hpp"
#include "pgfm/field.hpp"
#include "pgfm/functionals.hpp"
#include "pgfm/io.hpp"
#include "pgfm/measure.hpp"
#include "pgfm/model.hpp"
#include "pgfm/quadrature.hpp"
#include "pgfm/rng.hpp"
#include "pgfm/sampling.hpp"
#include "pgfm/set_integral.hpp"
#include "pgfm/test_sequence.hpp"
#include "pgfm/verification.hpp"
#include "pgfm/zoo.hpp"
