#pragma once

#include "discard/bootstrap.hpp"
#include "discard/domain.hpp"
#include "discard/error.hpp"
#include "discard/estimator.hpp"
#include "discard/ingest.hpp"
#include "discard/logistic.hpp"
#include "discard/results_io.hpp"
#include "discard/rng.hpp"
#include "discard/selection.hpp"
#include "discard/simulate.hpp"
#include "discard/stats.hpp"

namespace discard {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace discard
