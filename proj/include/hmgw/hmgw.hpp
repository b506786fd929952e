#pragma once

#include "hmgw/rng.hpp"
#include "hmgw/parallel.hpp"
#include "hmgw/stats.hpp"
#include "hmgw/offspring.hpp"
#include "hmgw/plane_tree.hpp"
#include "hmgw/gw_tree.hpp"
#include "hmgw/electric.hpp"
#include "hmgw/continuum.hpp"
#include "hmgw/rde.hpp"
