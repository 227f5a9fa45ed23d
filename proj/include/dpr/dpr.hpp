// Umbrella header for the double phase retrieval library.
#pragma once

#include "dpr/bessel.hpp"
#include "dpr/calibration.hpp"
#include "dpr/channels.hpp"
#include "dpr/dataio.hpp"
#include "dpr/experiments.hpp"
#include "dpr/imaging.hpp"
#include "dpr/medium.hpp"
#include "dpr/metrics.hpp"
#include "dpr/model.hpp"
#include "dpr/priors.hpp"
#include "dpr/solver.hpp"
#include "dpr/synthetic.hpp"
