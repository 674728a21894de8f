#pragma once

#define ATOMWEAVER_VERSION "0.1.0"

#include "atomweaver/amplitude.hpp"
#include "atomweaver/csv.hpp"
#include "atomweaver/lattice.hpp"
#include "atomweaver/parallel.hpp"
#include "atomweaver/phase_optimizer.hpp"
#include "atomweaver/planner.hpp"
#include "atomweaver/scenario.hpp"
#include "atomweaver/simulator.hpp"
#include "atomweaver/spectrum.hpp"
#include "atomweaver/statistics.hpp"
#include "atomweaver/stochastic.hpp"
#include "atomweaver/sweep.hpp"
#include "atomweaver/timing.hpp"
#include "atomweaver/waveform.hpp"
