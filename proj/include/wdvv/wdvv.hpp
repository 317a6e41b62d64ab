#pragma once

#include "exprlang.hpp"
#include "frobenius.hpp"
#include "hamop.hpp"
#include "hierarchy.hpp"
#include "hydrosim.hpp"
#include "integrate.hpp"
#include "matrix.hpp"
#include "poly.hpp"
#include "rational.hpp"
#include "realization.hpp"
#include "residual.hpp"
#include "submanifold.hpp"
#include "tensor.hpp"
