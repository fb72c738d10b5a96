#pragma once

#include "bgnflow/banded_matrix.hpp"
#include "bgnflow/bgn_solver.hpp"
#include "bgnflow/curve_mesh.hpp"
#include "bgnflow/diagnostics.hpp"
#include "bgnflow/errors.hpp"
#include "bgnflow/exact_flow.hpp"
#include "bgnflow/experiments.hpp"
#include "bgnflow/linear_solver.hpp"
#include "bgnflow/normals.hpp"
#include "bgnflow/quadrature.hpp"
#include "bgnflow/vec2.hpp"
#include "bgnflow/velocity_fields.hpp"
