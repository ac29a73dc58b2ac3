#pragma once

#include "regretlab/algorithms.hpp"
#include "regretlab/bench.hpp"
#include "regretlab/error.hpp"
#include "regretlab/game_core.hpp"
#include "regretlab/norms.hpp"
#include "regretlab/optimize.hpp"
#include "regretlab/oracle.hpp"
#include "regretlab/relaxations.hpp"
#include "regretlab/rng.hpp"
#include "regretlab/strategy_classes.hpp"
