#pragma once

// Companion-matrix state-space models for time series: structured O(d)
// recurrence ops, near-linear output-filter construction, closed-loop
// forecasting, classical-model constructions, and fitting utilities.

#include "cssm/common.hpp"
#include "cssm/companion.hpp"
#include "cssm/constructions.hpp"
#include "cssm/data.hpp"
#include "cssm/fft.hpp"
#include "cssm/filter.hpp"
#include "cssm/model.hpp"
#include "cssm/serialize.hpp"
#include "cssm/train.hpp"
