// Umbrella header.

#pragma once

#include "trancheloss/conditional.hpp"
#include "trancheloss/csv.hpp"
#include "trancheloss/errors.hpp"
#include "trancheloss/gauss.hpp"
#include "trancheloss/model.hpp"
#include "trancheloss/oracles.hpp"
#include "trancheloss/pricer.hpp"
