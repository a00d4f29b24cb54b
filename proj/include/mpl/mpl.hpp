#ifndef MPL_MPL_HPP
#define MPL_MPL_HPP

#include "mpl/error.hpp"
#include "mpl/estimate.hpp"
#include "mpl/harness.hpp"
#include "mpl/models/categorical.hpp"
#include "mpl/models/fvbm.hpp"
#include "mpl/models/params_io.hpp"
#include "mpl/models/rbm.hpp"
#include "mpl/numeric.hpp"
#include "mpl/optimize.hpp"
#include "mpl/pl.hpp"
#include "mpl/pmf.hpp"
#include "mpl/random.hpp"
#include "mpl/sample.hpp"
#include "mpl/support.hpp"

#endif  // MPL_MPL_HPP
