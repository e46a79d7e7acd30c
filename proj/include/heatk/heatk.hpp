#pragma once

#include "heatk/errors.hpp"
#include "heatk/graph.hpp"
#include "heatk/graph_io.hpp"
#include "heatk/heat_kernel.hpp"
#include "heatk/dense_oracle.hpp"
#include "heatk/kernel_checks.hpp"
#include "heatk/spectral.hpp"
#include "heatk/legendre.hpp"
#include "heatk/estimates.hpp"
#include "heatk/expression.hpp"
#include "heatk/families.hpp"
#include "heatk/report.hpp"
#include "heatk/scenario.hpp"
