#ifndef HPENCIL_HPENCIL_HPP
#define HPENCIL_HPENCIL_HPP

// Umbrella header.

#include "error.hpp"
#include "model.hpp"
#include "pencil.hpp"
#include "eigensolve.hpp"
#include "decompose.hpp"
#include "numerics.hpp"
#include "fmcw_trials.hpp"
#include "io.hpp"

#endif // HPENCIL_HPENCIL_HPP
