#pragma once

#include "popdiff/errors.hpp"
#include "popdiff/quadrature.hpp"
#include "popdiff/parallel.hpp"
#include "popdiff/grid_basis.hpp"
#include "popdiff/density.hpp"
#include "popdiff/assembly.hpp"
#include "popdiff/sampled_system.hpp"
#include "popdiff/forward.hpp"
#include "popdiff/objective.hpp"
#include "popdiff/optimizer.hpp"
#include "popdiff/synthetic.hpp"
#include "popdiff/uncertainty.hpp"
#include "popdiff/io.hpp"
#include "popdiff/experiments.hpp"
