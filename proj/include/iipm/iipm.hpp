#pragma once

#include "iipm/analysis.hpp"
#include "iipm/augmented_system.hpp"
#include "iipm/core.hpp"
#include "iipm/io.hpp"
#include "iipm/ipm_core.hpp"
#include "iipm/neighborhood.hpp"
#include "iipm/newton_solver.hpp"
#include "iipm/problem_gen.hpp"
#include "iipm/qp_model.hpp"
