#pragma once

// Umbrella header: realized-measure construction, the HAR family, penalized
// linear models, tree ensembles, feed-forward networks, forecast evaluation,
// accumulated local effects and VaR backtesting on a common data layer.

#include "volaforge/ale.hpp"
#include "volaforge/core.hpp"
#include "volaforge/csv.hpp"
#include "volaforge/dataset.hpp"
#include "volaforge/evaluation.hpp"
#include "volaforge/forecast.hpp"
#include "volaforge/linear.hpp"
#include "volaforge/models.hpp"
#include "volaforge/network.hpp"
#include "volaforge/pipeline.hpp"
#include "volaforge/realized.hpp"
#include "volaforge/risk.hpp"
#include "volaforge/serialize.hpp"
#include "volaforge/simulate.hpp"
#include "volaforge/stats.hpp"
#include "volaforge/timeseries.hpp"
#include "volaforge/tree.hpp"
