#pragma once

#include "algebra.hpp"
#include "errors.hpp"
#include "fields.hpp"
#include "flow_solver.hpp"
#include "grid.hpp"
#include "holo_moduli.hpp"
#include "models.hpp"
#include "polynomial.hpp"
#include "scalar_solver.hpp"
#include "transport.hpp"
