#pragma once

#include "qest/errors.hpp"
#include "qest/matrix.hpp"
#include "qest/kernels.hpp"
#include "qest/model.hpp"
#include "qest/povm.hpp"
#include "qest/fisher.hpp"
#include "qest/bounds.hpp"
#include "qest/optimal_povm.hpp"
#include "qest/region.hpp"
#include "qest/simulate.hpp"
