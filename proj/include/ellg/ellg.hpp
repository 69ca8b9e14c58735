#pragma once

#include "ellg/common.hpp"
#include "ellg/mesh.hpp"
#include "ellg/quadrature.hpp"
#include "ellg/fespace.hpp"
#include "ellg/assembly.hpp"
#include "ellg/solver.hpp"
#include "ellg/bem.hpp"
#include "ellg/stepper.hpp"
#include "ellg/config.hpp"
#include "ellg/io.hpp"
#include "ellg/validation.hpp"
