#pragma once

// Convenience umbrella for the whole library.

#include "afflab/equilibrium.hpp"
#include "afflab/errors.hpp"
#include "afflab/harness.hpp"
#include "afflab/irreducibility.hpp"
#include "afflab/matrix.hpp"
#include "afflab/multilinear.hpp"
#include "afflab/pressure.hpp"
#include "afflab/random.hpp"
#include "afflab/spectrum.hpp"
#include "afflab/symbolic.hpp"
#include "afflab/tolerances.hpp"
#include "afflab/tuple_io.hpp"
