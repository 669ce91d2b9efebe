#pragma once

#include "massive/ambient.hpp"
#include "massive/cylinder.hpp"
#include "massive/dynamics.hpp"
#include "massive/error.hpp"
#include "massive/heat_kernel.hpp"
#include "massive/measures.hpp"
#include "massive/parallel.hpp"
#include "massive/potential.hpp"
#include "massive/rng.hpp"
#include "massive/simplex.hpp"
#include "massive/stats.hpp"
#include "massive/suites.hpp"
#include "massive/transport.hpp"
#include "massive/verify.hpp"
