#pragma once

// Umbrella header: the full library.

#include "hkexp/error.hpp"
#include "hkexp/rational.hpp"
#include "hkexp/multi_index.hpp"
#include "hkexp/polynomial.hpp"
#include "hkexp/diff_op.hpp"
#include "hkexp/graded_op.hpp"
#include "hkexp/gaussian_laurent.hpp"
#include "hkexp/moments.hpp"
#include "hkexp/kantorovitz.hpp"
#include "hkexp/symbolcalc.hpp"
#include "hkexp/mehler.hpp"
#include "hkexp/oracle.hpp"
#include "hkexp/invariants.hpp"
#include "hkexp/fixtures.hpp"
#include "hkexp/validate.hpp"
