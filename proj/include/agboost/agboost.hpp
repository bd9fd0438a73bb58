#pragma once

#include "agboost/attention.hpp"
#include "agboost/data.hpp"
#include "agboost/errors.hpp"
#include "agboost/experiment.hpp"
#include "agboost/gbm.hpp"
#include "agboost/metrics.hpp"
#include "agboost/rng.hpp"
#include "agboost/simplex_qp.hpp"
#include "agboost/tree.hpp"
