#pragma once

#include "fcaw/caw.hpp"
#include "fcaw/core.hpp"
#include "fcaw/evaluation.hpp"
#include "fcaw/factor.hpp"
#include "fcaw/market_data.hpp"
#include "fcaw/optim.hpp"
#include "fcaw/rcov.hpp"
#include "fcaw/simulation.hpp"
#include "fcaw/var.hpp"
