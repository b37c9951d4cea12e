#pragma once

#include "gclaim/errors.hpp"
#include "gclaim/gparams.hpp"
#include "gclaim/payoff.hpp"
#include "gclaim/lattice.hpp"
#include "gclaim/stopping.hpp"
#include "gclaim/gdm.hpp"
#include "gclaim/pde.hpp"
#include "gclaim/oracle.hpp"
