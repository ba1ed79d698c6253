#pragma once

#include "arsim/ars.hpp"
#include "arsim/core.hpp"
#include "arsim/detection.hpp"
#include "arsim/engine.hpp"
#include "arsim/equilibrium.hpp"
#include "arsim/error.hpp"
#include "arsim/npool.hpp"
#include "arsim/optimize.hpp"
#include "arsim/parallel.hpp"
#include "arsim/payoff.hpp"
#include "arsim/scenario.hpp"
