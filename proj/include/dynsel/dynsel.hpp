#pragma once

#include "dynsel/apply.hpp"
#include "dynsel/config.hpp"
#include "dynsel/core.hpp"
#include "dynsel/dcs.hpp"
#include "dynsel/error.hpp"
#include "dynsel/eval.hpp"
#include "dynsel/experiment.hpp"
#include "dynsel/learners.hpp"
#include "dynsel/metrics.hpp"
#include "dynsel/pool.hpp"
#include "dynsel/validation.hpp"
