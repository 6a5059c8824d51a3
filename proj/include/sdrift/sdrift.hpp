#pragma once

#include "sdrift/analysis.hpp"
#include "sdrift/assembly.hpp"
#include "sdrift/commands.hpp"
#include "sdrift/config.hpp"
#include "sdrift/csv.hpp"
#include "sdrift/domain.hpp"
#include "sdrift/error.hpp"
#include "sdrift/expression.hpp"
#include "sdrift/fields.hpp"
#include "sdrift/jet.hpp"
#include "sdrift/krylov.hpp"
#include "sdrift/scenarios.hpp"
#include "sdrift/solver.hpp"
#include "sdrift/sparse.hpp"
#include "sdrift/vec3.hpp"
