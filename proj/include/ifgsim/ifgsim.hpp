#pragma once

#include "ifgsim/atom/response.hpp"
#include "ifgsim/core/errors.hpp"
#include "ifgsim/core/fft.hpp"
#include "ifgsim/core/field.hpp"
#include "ifgsim/core/grid.hpp"
#include "ifgsim/core/parallel.hpp"
#include "ifgsim/core/propagation.hpp"
#include "ifgsim/estimator/noise.hpp"
#include "ifgsim/estimator/phase_curve.hpp"
#include "ifgsim/estimator/series_fit.hpp"
#include "ifgsim/imaging/interferogram.hpp"
#include "ifgsim/imaging/model.hpp"
#include "ifgsim/imaging/pupil.hpp"
#include "ifgsim/imaging/system.hpp"
