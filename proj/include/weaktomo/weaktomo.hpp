#pragma once

#include "weaktomo/error.hpp"
#include "weaktomo/lundeen_bamber.hpp"
#include "weaktomo/matrix_core.hpp"
#include "weaktomo/mub.hpp"
#include "weaktomo/operator_basis.hpp"
#include "weaktomo/rng.hpp"
#include "weaktomo/statistics.hpp"
#include "weaktomo/weak_measure.hpp"
#include "weaktomo/wu_scheme.hpp"
